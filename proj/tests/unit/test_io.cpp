#include "support.hpp"

#include "svaro/errors.hpp"
#include "svaro/io.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

using namespace svaro;
using namespace svaro::testing;
namespace fs = std::filesystem;

namespace {

io::VolumeHeader header_4x4() {
  io::VolumeHeader h;
  h.dims = {4, 4};
  h.mask.assign(16, true);
  h.units = "a.u.";
  h.seed = 7;
  return h;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_CASE("mask run-length encoding") {
  CHECK(io::encode_mask_rle(std::vector<bool>(16, true)) == "16x1");
  const std::vector<bool> m{false, false, true, true, true, false};
  CHECK(io::encode_mask_rle(m) == "2x0,3x1,1x0");
  CHECK(io::decode_mask_rle("2x0,3x1,1x0", 6) == m);
  CHECK_THROWS_AS(io::decode_mask_rle("2x0,3x1", 6), SchemaError);
  CHECK_THROWS_AS(io::decode_mask_rle("2x2", 2), SchemaError);
  CHECK_THROWS_AS(io::decode_mask_rle("ax1", 2), SchemaError);
}

TEST_CASE("volume round trip is bit exact") {
  TempDir dir("vol");
  Eigen::MatrixXd data = random_matrix(7, 16, 3, 1e3);
  data(0, 0) = std::numeric_limits<double>::denorm_min();
  data(1, 1) = -0.0;
  io::write_volume(dir / "v.bin", data, header_4x4());
  CHECK(fs::file_size(dir / "v.bin") == 7 * 16 * 8);
  CHECK(fs::exists(dir / "v.json"));
  const io::Volume v = io::read_volume(dir / "v.bin");
  CHECK(v.header.T == 7);
  CHECK(v.header.N == 16);
  CHECK(v.header.seed == std::optional<std::uint64_t>(7));
  CHECK(v.header.units == "a.u.");
  for (Index i = 0; i < data.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(v.data.data()[i]) == std::bit_cast<std::uint64_t>(data.data()[i]));
  }
  // Payload order is row-major: scan 0 first.
  const std::string raw = io::read_file(dir / "v.bin");
  double second;
  std::memcpy(&second, raw.data() + 8, 8);
  CHECK(second == data(0, 1));
  CHECK_FALSE(fs::exists(dir / "v.bin.tmp"));
}

TEST_CASE("volume read errors") {
  TempDir dir("volerr");
  const Eigen::MatrixXd data = random_matrix(3, 16, 4);
  io::write_volume(dir / "v.bin", data, header_4x4());

  std::string raw = io::read_file(dir / "v.bin");
  write_text(dir / "v.bin", raw.substr(0, raw.size() - 8));
  CHECK_THROWS_AS(io::read_volume(dir / "v.bin"), SchemaError);

  Eigen::MatrixXd bad = data;
  bad(2, 5) = std::nan("");
  io::write_volume(dir / "v.bin", bad, header_4x4());
  try {
    io::read_volume(dir / "v.bin");
    FAIL("expected a non-finite error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("scan 2, voxel 5") != std::string::npos);
  }
  CHECK_THROWS_AS(io::read_volume(dir / "missing.bin"), IoError);

  io::VolumeHeader h = header_4x4();
  h.mask[0] = false;
  CHECK_THROWS_AS(io::write_volume(dir / "w.bin", data, h), SchemaError);
}

TEST_CASE("design CSV with and without header") {
  TempDir dir("csv");
  const Eigen::MatrixXd X = random_matrix(200, 2, 5);
  io::write_csv_matrix(dir / "d.csv", X, {"stim", "intercept"});
  const Eigen::MatrixXd back = io::read_design(dir / "d.csv");
  CHECK(back.rows() == 200);
  CHECK(back.cols() == 2);
  CHECK((back - X).cwiseAbs().maxCoeff() < 1e-12);

  write_text(dir / "plain.csv", "1,2\n3.5,-4e-3\n\n");
  const Eigen::MatrixXd p = io::read_design(dir / "plain.csv");
  CHECK(p.rows() == 2);
  CHECK(p(1, 1) == -4e-3);

  write_text(dir / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(io::read_design(dir / "ragged.csv"), SchemaError);
  write_text(dir / "text.csv", "a,b\n1,2\nx,3\n");
  CHECK_THROWS_AS(io::read_design(dir / "text.csv"), SchemaError);
  write_text(dir / "inf.csv", "1,inf\n");
  CHECK_THROWS_AS(io::read_design(dir / "inf.csv"), SchemaError);
}

TEST_CASE("maps and previews") {
  TempDir dir("map");
  const LatticeGraph g = build_lattice({2, 3}, {true, true, false, true, true, true});
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  io::write_map(dir / "m", v, g, true);
  CHECK(io::read_map_bin(dir / "m.bin", 5) == v);
  const std::string pgm = io::read_file(dir / "m.pgm");
  CHECK(pgm.rfind("P5\n3 2\n255\n", 0) == 0);
  CHECK(pgm.size() == 11 + 6);
  CHECK(static_cast<unsigned char>(pgm[11 + 2]) == 0);    // masked-out cell
  CHECK(static_cast<unsigned char>(pgm[11 + 5]) == 255);  // maximum
  CHECK(io::read_file(dir / "m.csv").rfind("voxel,i,j,value\n0,0,0,0\n", 0) == 0);
}

TEST_CASE("run configuration parsing") {
  const io::RunConfig c = io::parse_run_config(R"({
    "mode": "fixed_order", "P0": 2,
    "hyper": {"P": 6, "beta0": -0.5, "beta1": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6], "contrast": [0, 1]},
    "sampler": {"n_burnin": 10, "seed": 42, "store_draws": true},
    "simulation": {"preset": "sim2", "T": 150}
  })");
  CHECK(c.mode == "fixed_order");
  CHECK(c.P0 == 2);
  CHECK(c.hyper.P == 6);
  CHECK(c.hyper.beta0 == std::vector<double>(6, -0.5));
  CHECK(c.hyper.beta1[5] == 0.6);
  CHECK(c.hyper.contrast == Eigen::Vector2d(0, 1));
  CHECK(c.sampler.n_burnin == 10);
  CHECK(c.sampler.seed == 42);
  CHECK(c.sampler.store.draws);
  CHECK(c.simulation.design == SimDesign::kGlmAr);
  CHECK(c.simulation.T == 150);

  CHECK_THROWS_AS(io::parse_run_config(R"({"hyper": {"P": 2, "bogus": 1}})"), SchemaError);
  CHECK_THROWS_AS(io::parse_run_config(R"({"typo": 1})"), SchemaError);
  CHECK_THROWS_AS(io::parse_run_config(R"({"hyper": {"P": "four"}})"), SchemaError);
  CHECK_THROWS_AS(io::parse_run_config(R"({"hyper": {"P": 3, "beta0": [1, 2]}})"), SchemaError);
  CHECK_THROWS_AS(io::parse_run_config(R"({"mode": "other"})"), SchemaError);
  CHECK_THROWS_AS(io::parse_run_config("{"), SchemaError);
}

TEST_CASE("overrides and config hashing") {
  io::RunConfig c;
  const std::string h0 = io::config_hash(c);
  CHECK(h0.size() == 16);
  CHECK(io::config_hash(c) == h0);
  io::apply_override(c, "hyper.P", "8");
  CHECK(c.hyper.P == 8);
  CHECK(c.hyper.beta0.size() == 8);
  io::apply_override(c, "sampler.seed", "5");
  io::apply_override(c, "volume", "data/x.bin");
  CHECK(c.sampler.seed == 5);
  CHECK(c.volume == "data/x.bin");
  CHECK(io::config_hash(c) != h0);
  CHECK_THROWS_AS(io::apply_override(c, "hyper.nope", "1"), SchemaError);
  CHECK_THROWS_AS(io::apply_override(c, "nope.P", "1"), SchemaError);

  const io::RunConfig back = io::parse_run_config(io::run_config_json(c));
  CHECK(io::run_config_json(back) == io::run_config_json(c));

  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("simulation and chain persistence round-trip") {
  TempDir dir("chain");
  SimConfig sc = sim1_preset();
  sc.dims = {4, 4};
  sc.T = 60;
  sc.P = 2;
  const Simulation sim = simulate(sc, 3);
  io::write_simulation(dir.path(), sim, 3, "abc");
  const GroundTruth t = io::read_truth(dir.path());
  CHECK(t.W == sim.truth.W);
  CHECK(t.A == sim.truth.A);
  CHECK((t.Gamma == sim.truth.Gamma).all());
  CHECK(t.active == sim.truth.active);
  CHECK(t.active_threshold == sim.truth.active_threshold);
  CHECK(io::read_volume(dir / "data.bin").data == sim.dataset.Y);

  SamplerConfig cfg;
  cfg.n_burnin = 5;
  cfg.n_samples = 6;
  cfg.store.draws = true;
  const ChainOutput c = run_chain(sim.dataset, default_hyperparams(2, 2), cfg);
  io::ChainMeta meta{io::header_for(sim.dataset.graph, sim.dataset.T()), "svaro", 0, "abc"};
  io::write_chain(dir / "chain", c, meta);
  io::ChainMeta back_meta;
  const ChainOutput r = io::read_chain(dir / "chain", &back_meta);
  CHECK(back_meta.config_hash == "abc");
  CHECK(back_meta.volume.dims == std::vector<int>{4, 4});
  CHECK(r.w.mean == c.w.mean);
  CHECK(r.a.m2 == c.a.m2);
  CHECK(r.alpha.mean == c.alpha.mean);
  CHECK(r.gamma_count == c.gamma_count);
  CHECK(r.cpo_sum == c.cpo_sum);
  CHECK(r.exceed_count == c.exceed_count);
  CHECK(r.loglik_trace == c.loglik_trace);
  CHECK(r.loglik_draws == c.loglik_draws);
  REQUIRE(r.w_draws.size() == c.w_draws.size());
  CHECK(r.w_draws.back() == c.w_draws.back());
  CHECK(lpml(r) == lpml(c));
}
