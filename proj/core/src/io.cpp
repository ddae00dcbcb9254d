#include "svaro/io.hpp"

#include "svaro/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace svaro::io {

using nlohmann::json;

namespace {

// ---- raw float64 ------------------------------------------------------------

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

void append_f64(std::string& out, double x) {
  const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(x));
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

double read_f64(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  return std::bit_cast<double>(to_little(bits));
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string matrix_bytes(const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) append_f64(out, m(r, c));
  }
  return out;
}

Eigen::MatrixXd matrix_from_bytes(const std::string& bytes, Index rows, Index cols,
                                  const std::string& what) {
  const std::size_t expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8;
  if (bytes.size() != expected) {
    throw SchemaError(what + ": payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected));
  }
  Eigen::MatrixXd m(rows, cols);
  const char* p = bytes.data();
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c, p += 8) m(r, c) = read_f64(p);
  }
  return m;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(what + ": invalid JSON: " + e.what());
  }
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw SchemaError("key '" + key + "' has the wrong type");
  }
}

json header_json(const VolumeHeader& h) {
  json j;
  j["format"] = "svaro-volume/1";
  j["dims"] = h.dims;
  j["mask"] = encode_mask_rle(h.mask);
  j["T"] = h.T;
  j["N"] = h.N;
  j["units"] = h.units;
  if (h.seed) j["seed"] = *h.seed;
  if (!h.config_hash.empty()) j["config_hash"] = h.config_hash;
  return j;
}

VolumeHeader header_from_json(const json& j, const std::string& what) {
  VolumeHeader h;
  try {
    h.dims = j.at("dims").get<std::vector<int>>();
    std::size_t cells = 1;
    for (int d : h.dims) {
      if (d <= 0) throw SchemaError(what + ": dims must be positive");
      cells *= static_cast<std::size_t>(d);
    }
    h.mask = decode_mask_rle(j.at("mask").get<std::string>(), cells);
    h.T = j.at("T").get<Index>();
    h.N = j.at("N").get<Index>();
    h.units = j.value("units", std::string());
    if (j.contains("seed")) h.seed = j.at("seed").get<std::uint64_t>();
    h.config_hash = j.value("config_hash", std::string());
  } catch (const json::exception& e) {
    throw SchemaError(what + ": " + e.what());
  }
  const auto n_true = static_cast<Index>(std::count(h.mask.begin(), h.mask.end(), true));
  if (n_true != h.N) {
    throw SchemaError(what + ": N = " + std::to_string(h.N) + " but the mask has " +
                      std::to_string(n_true) + " voxels");
  }
  return h;
}

}  // namespace

// ---- files ------------------------------------------------------------------

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- volumes ----------------------------------------------------------------

fs::path sidecar_path(const fs::path& payload) {
  fs::path p = payload;
  p.replace_extension(".json");
  return p;
}

std::string encode_mask_rle(const std::vector<bool>& mask) {
  std::string out;
  std::size_t i = 0;
  while (i < mask.size()) {
    std::size_t j = i;
    while (j < mask.size() && mask[j] == mask[i]) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(j - i) + "x" + (mask[i] ? "1" : "0");
    i = j;
  }
  return out;
}

std::vector<bool> decode_mask_rle(const std::string& rle, std::size_t expected_cells) {
  std::vector<bool> mask;
  mask.reserve(expected_cells);
  std::stringstream ss(rle);
  std::string run;
  while (std::getline(ss, run, ',')) {
    const auto x = run.find('x');
    std::size_t count = 0;
    if (x == std::string::npos || x + 2 != run.size() || (run[x + 1] != '0' && run[x + 1] != '1')) {
      throw SchemaError("bad mask run '" + run + "'");
    }
    const auto res = std::from_chars(run.data(), run.data() + x, count);
    if (res.ec != std::errc() || res.ptr != run.data() + x || count == 0) {
      throw SchemaError("bad mask run '" + run + "'");
    }
    mask.insert(mask.end(), count, run[x + 1] == '1');
  }
  if (mask.size() != expected_cells) {
    throw SchemaError("mask covers " + std::to_string(mask.size()) + " cells, grid has " +
                      std::to_string(expected_cells));
  }
  return mask;
}

LatticeGraph graph_from_header(const VolumeHeader& header) {
  try {
    return build_lattice(header.dims, header.mask);
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("volume header: ") + e.what());
  }
}

VolumeHeader header_for(const LatticeGraph& graph, Index T) {
  VolumeHeader h;
  h.dims = graph.dims;
  h.mask = graph.mask;
  h.T = T;
  h.N = graph.n_voxels();
  return h;
}

void write_volume(const fs::path& payload, const Eigen::MatrixXd& data, VolumeHeader header) {
  header.T = data.rows();
  header.N = data.cols();
  const auto n_true = static_cast<Index>(std::count(header.mask.begin(), header.mask.end(), true));
  if (n_true != header.N) throw SchemaError("mask voxel count does not match the data columns");
  write_file_atomic(payload, matrix_bytes(data));
  write_file_atomic(sidecar_path(payload), header_json(header).dump(2) + "\n");
}

Volume read_volume(const fs::path& payload) {
  const fs::path side = sidecar_path(payload);
  Volume v;
  v.header = header_from_json(parse_json(read_file(side), side.string()), side.string());
  v.data = matrix_from_bytes(read_file(payload), v.header.T, v.header.N, payload.string());
  for (Index t = 0; t < v.data.rows(); ++t) {
    for (Index n = 0; n < v.data.cols(); ++n) {
      if (!std::isfinite(v.data(t, n))) {
        throw SchemaError(payload.string() + ": non-finite value at scan " + std::to_string(t) +
                          ", voxel " + std::to_string(n));
      }
    }
  }
  return v;
}

// ---- CSV ----------------------------------------------------------------------

Eigen::MatrixXd read_csv_matrix(const fs::path& path) {
  std::stringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string field;
    bool numeric = true;
    while (std::getline(ls, field, ',')) {
      double v = 0.0;
      if (!parse_double(field, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field '" +
                        field + "'");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": non-finite value in column " +
                          std::to_string(c));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(rows.front().size()) + " fields, found " +
                        std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError(path.string() + ": no data rows");
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void write_csv_matrix(const fs::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  if (!header.empty()) out += '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ---- maps ---------------------------------------------------------------------

std::string pgm_image(const Eigen::VectorXd& values, const LatticeGraph& graph) {
  const auto& d = graph.dims;
  const Index width = d.back();
  const Index height = graph.n_cells() / width;
  const double lo = values.size() ? values.minCoeff() : 0.0;
  const double hi = values.size() ? values.maxCoeff() : 0.0;
  std::string pixels(static_cast<std::size_t>(width * height), '\0');
  for (Index n = 0; n < graph.n_voxels(); ++n) {
    const double u = hi > lo ? (values(n) - lo) / (hi - lo) : 0.0;
    pixels[graph.cell_of[n]] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * u)));
  }
  return "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n" + pixels;
}

void write_map(const fs::path& base, const Eigen::VectorXd& values, const LatticeGraph& graph,
               bool pgm_preview) {
  if (values.size() != graph.n_voxels()) throw InvalidArgument("map length does not match the lattice");
  auto with_ext = [&](const char* ext) {
    fs::path p = base;
    p += ext;
    return p;
  };
  write_file_atomic(with_ext(".bin"), matrix_bytes(values));

  std::string csv = "voxel";
  static const char* axes[] = {"i", "j", "k"};
  for (std::size_t a = 0; a < graph.dims.size(); ++a) csv += std::string(",") + axes[a];
  csv += ",value\n";
  for (Index n = 0; n < values.size(); ++n) {
    csv += std::to_string(n);
    for (int c : graph.coordinates(n)) csv += "," + std::to_string(c);
    csv += "," + format_double(values(n)) + "\n";
  }
  write_file_atomic(with_ext(".csv"), csv);
  if (pgm_preview) write_file_atomic(with_ext(".pgm"), pgm_image(values, graph));
}

Eigen::VectorXd read_map_bin(const fs::path& bin, Index N) {
  return matrix_from_bytes(read_file(bin), N, 1, bin.string());
}

// ---- run configuration --------------------------------------------------------

namespace {

json uniform_or_array(const std::vector<double>& v) {
  if (!v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
    return v.front();
  }
  return v;
}

std::vector<double> broadcast(const json& j, Index P, const std::string& key) {
  if (j.is_number()) return std::vector<double>(static_cast<std::size_t>(P), j.get<double>());
  auto v = get_as<std::vector<double>>(j, key);
  if (static_cast<Index>(v.size()) != P) {
    throw SchemaError("key '" + key + "' needs " + std::to_string(P) + " entries");
  }
  return v;
}

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SchemaError("'" + section + "' must be an object");
  for (const auto& item : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return item.key() == a; });
    if (!ok) {
      throw SchemaError("unknown key '" + (section.empty() ? "" : section + ".") + item.key() + "'");
    }
  }
}

template <class T>
void read_key(const json& j, const std::string& section, const char* key, T& out) {
  if (j.contains(key)) out = get_as<T>(j.at(key), section + "." + key);
}

json to_json(const RunConfig& c) {
  json j;
  j["mode"] = c.mode;
  j["P0"] = c.P0;
  j["volume"] = c.volume;
  j["design"] = c.design;
  j["output"] = c.output;

  const Hyperparams& h = c.hyper;
  json hj;
  hj["P"] = h.P;
  hj["beta0"] = uniform_or_array(h.beta0);
  hj["beta1"] = uniform_or_array(h.beta1);
  hj["q1"] = h.q1;
  hj["q2"] = h.q2;
  hj["u1"] = h.u1;
  hj["u2"] = h.u2;
  hj["r1"] = h.r1;
  hj["r2"] = h.r2;
  hj["epsilon"] = h.epsilon;
  hj["contrast"] = std::vector<double>(h.contrast.data(), h.contrast.data() + h.contrast.size());
  hj["delta_e"] = h.delta_e;
  hj["delta_p"] = h.delta_p;
  hj["spatial_ridge"] = h.spatial_ridge;
  hj["on_count_neighbor_term"] = h.on_count_neighbor_term;
  j["hyper"] = hj;

  const SamplerConfig& s = c.sampler;
  j["sampler"] = {{"n_burnin", s.n_burnin},       {"n_samples", s.n_samples},
                  {"thin", s.thin},               {"seed", s.seed},
                  {"sw_period", s.sw_period},     {"threads", s.threads},
                  {"randomized_scan", s.randomized_scan},
                  {"store_draws", s.store.draws}, {"store_lpml", s.store.lpml}};

  const SimConfig& m = c.simulation;
  json mj;
  mj["preset"] = m.preset;
  mj["design"] = m.design == SimDesign::kSvaro ? "svaro" : "glmar";
  mj["dims"] = m.dims;
  mj["T"] = m.T;
  mj["P"] = m.P;
  mj["fit_P"] = m.fit_P;
  mj["tau"] = m.tau;
  mj["beta0"] = m.beta0;
  mj["beta1"] = m.beta1;
  mj["lambda"] = m.lambda;
  mj["w1_mean"] = m.w1_mean;
  mj["w1_precision_scale"] = m.w1_precision_scale;
  mj["w2_mean"] = m.w2_mean;
  mj["w2_precision_scale"] = m.w2_precision_scale;
  mj["ar_mean"] = m.ar_mean;
  mj["ar_precision_scale"] = m.ar_precision_scale;
  mj["jitter_factor"] = m.jitter_factor;
  mj["tr"] = m.tr;
  mj["block_length"] = m.block_length;
  mj["ising_sweeps"] = m.ising_sweeps;
  mj["sw_period"] = m.sw_period;
  mj["retry_cap"] = m.retry_cap;
  mj["active_fraction"] = m.active_fraction;
  j["simulation"] = mj;
  return j;
}

RunConfig from_json(const json& j) {
  check_keys(j, "", {"mode", "P0", "volume", "design", "output", "hyper", "sampler", "simulation"});
  RunConfig c;
  read_key(j, "", "mode", c.mode);
  if (c.mode != "svaro" && c.mode != "fixed_order") {
    throw SchemaError("key 'mode' must be \"svaro\" or \"fixed_order\"");
  }
  read_key(j, "", "P0", c.P0);
  read_key(j, "", "volume", c.volume);
  read_key(j, "", "design", c.design);
  read_key(j, "", "output", c.output);

  if (j.contains("hyper")) {
    const json& h = j.at("hyper");
    check_keys(h, "hyper", {"P", "beta0", "beta1", "q1", "q2", "u1", "u2", "r1", "r2", "epsilon",
                            "contrast", "delta_e", "delta_p", "spatial_ridge",
                            "on_count_neighbor_term"});
    Index P = c.hyper.P;
    read_key(h, "hyper", "P", P);
    if (P < 0) throw SchemaError("key 'hyper.P' must be non-negative");
    Hyperparams hp = default_hyperparams(P, 2);
    if (h.contains("beta0")) hp.beta0 = broadcast(h.at("beta0"), P, "hyper.beta0");
    if (h.contains("beta1")) hp.beta1 = broadcast(h.at("beta1"), P, "hyper.beta1");
    read_key(h, "hyper", "q1", hp.q1);
    read_key(h, "hyper", "q2", hp.q2);
    read_key(h, "hyper", "u1", hp.u1);
    read_key(h, "hyper", "u2", hp.u2);
    read_key(h, "hyper", "r1", hp.r1);
    read_key(h, "hyper", "r2", hp.r2);
    read_key(h, "hyper", "epsilon", hp.epsilon);
    if (h.contains("contrast")) {
      const auto v = get_as<std::vector<double>>(h.at("contrast"), "hyper.contrast");
      hp.contrast = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
    }
    read_key(h, "hyper", "delta_e", hp.delta_e);
    read_key(h, "hyper", "delta_p", hp.delta_p);
    read_key(h, "hyper", "spatial_ridge", hp.spatial_ridge);
    read_key(h, "hyper", "on_count_neighbor_term", hp.on_count_neighbor_term);
    c.hyper = std::move(hp);
  }

  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    check_keys(s, "sampler", {"n_burnin", "n_samples", "thin", "seed", "sw_period", "threads",
                              "randomized_scan", "store_draws", "store_lpml"});
    read_key(s, "sampler", "n_burnin", c.sampler.n_burnin);
    read_key(s, "sampler", "n_samples", c.sampler.n_samples);
    read_key(s, "sampler", "thin", c.sampler.thin);
    read_key(s, "sampler", "seed", c.sampler.seed);
    read_key(s, "sampler", "sw_period", c.sampler.sw_period);
    read_key(s, "sampler", "threads", c.sampler.threads);
    read_key(s, "sampler", "randomized_scan", c.sampler.randomized_scan);
    read_key(s, "sampler", "store_draws", c.sampler.store.draws);
    read_key(s, "sampler", "store_lpml", c.sampler.store.lpml);
  }

  if (j.contains("simulation")) {
    const json& m = j.at("simulation");
    check_keys(m, "simulation",
               {"preset", "design", "dims", "T", "P", "fit_P", "tau", "beta0", "beta1", "lambda",
                "w1_mean", "w1_precision_scale", "w2_mean", "w2_precision_scale", "ar_mean",
                "ar_precision_scale", "jitter_factor", "tr", "block_length", "ising_sweeps",
                "sw_period", "retry_cap", "active_fraction"});
    std::string preset = "sim1";
    read_key(m, "simulation", "preset", preset);
    if (preset == "sim1") {
      c.simulation = sim1_preset();
    } else if (preset == "sim2") {
      c.simulation = sim2_preset();
    } else {
      throw SchemaError("key 'simulation.preset' must be \"sim1\" or \"sim2\"");
    }
    SimConfig& s = c.simulation;
    if (m.contains("design")) {
      const auto d = get_as<std::string>(m.at("design"), "simulation.design");
      if (d == "svaro") {
        s.design = SimDesign::kSvaro;
      } else if (d == "glmar") {
        s.design = SimDesign::kGlmAr;
      } else {
        throw SchemaError("key 'simulation.design' must be \"svaro\" or \"glmar\"");
      }
    }
    read_key(m, "simulation", "dims", s.dims);
    read_key(m, "simulation", "T", s.T);
    read_key(m, "simulation", "P", s.P);
    read_key(m, "simulation", "fit_P", s.fit_P);
    read_key(m, "simulation", "tau", s.tau);
    read_key(m, "simulation", "beta0", s.beta0);
    read_key(m, "simulation", "beta1", s.beta1);
    read_key(m, "simulation", "lambda", s.lambda);
    read_key(m, "simulation", "w1_mean", s.w1_mean);
    read_key(m, "simulation", "w1_precision_scale", s.w1_precision_scale);
    read_key(m, "simulation", "w2_mean", s.w2_mean);
    read_key(m, "simulation", "w2_precision_scale", s.w2_precision_scale);
    read_key(m, "simulation", "ar_mean", s.ar_mean);
    read_key(m, "simulation", "ar_precision_scale", s.ar_precision_scale);
    read_key(m, "simulation", "jitter_factor", s.jitter_factor);
    read_key(m, "simulation", "tr", s.tr);
    read_key(m, "simulation", "block_length", s.block_length);
    read_key(m, "simulation", "ising_sweeps", s.ising_sweeps);
    read_key(m, "simulation", "sw_period", s.sw_period);
    read_key(m, "simulation", "retry_cap", s.retry_cap);
    read_key(m, "simulation", "active_fraction", s.active_fraction);
  }
  return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  return from_json(parse_json(json_text, "run config"));
}

RunConfig load_run_config(const fs::path& path) {
  return from_json(parse_json(read_file(path), path.string()));
}

std::string run_config_json(const RunConfig& config) { return to_json(config).dump(); }

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  json j = to_json(config);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw SchemaError("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) throw SchemaError("unknown key '" + key + "'");
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() || !node->contains(parts.back())) {
    throw SchemaError("unknown key '" + key + "'");
  }
  (*node)[parts.back()] = parsed;
  config = from_json(j);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config) { return fnv1a_hex(run_config_json(config)); }

// ---- simulations --------------------------------------------------------------

namespace {

Eigen::MatrixXd indicator_to_double(const IndicatorMatrix& g) { return g.cast<double>().matrix(); }

Eigen::VectorXd bytes_to_vector(const std::vector<std::uint8_t>& v) {
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = v[i];
  return out;
}

}  // namespace

void write_simulation(const fs::path& dir, const Simulation& sim, std::uint64_t seed,
                      const std::string& hash) {
  const Dataset& d = sim.dataset;
  VolumeHeader h = header_for(d.graph, d.T());
  h.units = "simulated BOLD (arbitrary)";
  h.seed = seed;
  h.config_hash = hash;
  write_volume(dir / "data.bin", d.Y, h);
  std::vector<std::string> design_header;
  for (Index k = 0; k < d.K(); ++k) design_header.push_back("x" + std::to_string(k + 1));
  write_csv_matrix(dir / "design.csv", d.X_full, design_header);

  const GroundTruth& t = sim.truth;
  const fs::path td = dir / "truth";
  write_csv_matrix(td / "W.csv", t.W);
  write_csv_matrix(td / "A.csv", t.A);
  write_csv_matrix(td / "gamma.csv", indicator_to_double(t.Gamma));
  write_csv_matrix(td / "lambda.csv", t.lambda);
  write_csv_matrix(td / "active.csv", bytes_to_vector(t.active));
  const auto orders = t.max_order();
  Eigen::VectorXd ov(static_cast<Index>(orders.size()));
  for (std::size_t i = 0; i < orders.size(); ++i) ov(static_cast<Index>(i)) = orders[i];
  write_csv_matrix(td / "orders.csv", ov);
  json meta{{"active_threshold", t.active_threshold},
            {"seed", seed},
            {"config_hash", hash},
            {"P", t.A.rows()},
            {"N", t.W.cols()}};
  write_file_atomic(td / "truth.json", meta.dump(2) + "\n");
}

GroundTruth read_truth(const fs::path& dir) {
  const fs::path td = dir / "truth";
  const json meta = parse_json(read_file(td / "truth.json"), (td / "truth.json").string());
  GroundTruth t;
  const Index P = meta.at("P").get<Index>();
  const Index N = meta.at("N").get<Index>();
  t.W = read_csv_matrix(td / "W.csv");
  t.A = P > 0 ? read_csv_matrix(td / "A.csv") : Eigen::MatrixXd(0, N);
  t.lambda = read_csv_matrix(td / "lambda.csv").col(0);
  const Eigen::MatrixXd g = P > 0 ? read_csv_matrix(td / "gamma.csv") : Eigen::MatrixXd(0, N);
  t.Gamma = g.array().cast<std::uint8_t>();
  const Eigen::VectorXd act = read_csv_matrix(td / "active.csv").col(0);
  t.active.resize(static_cast<std::size_t>(act.size()));
  for (Index n = 0; n < act.size(); ++n) t.active[n] = act(n) != 0.0 ? 1 : 0;
  t.active_threshold = meta.at("active_threshold").get<double>();
  if (t.W.cols() != N || t.A.cols() != N || t.lambda.size() != N ||
      static_cast<Index>(t.active.size()) != N || t.A.rows() != P) {
    throw SchemaError(td.string() + ": truth files disagree on shape");
  }
  return t;
}

// ---- chains -------------------------------------------------------------------

namespace {

void write_moments(const fs::path& dir, const std::string& name, const RunningMoments& m) {
  write_csv_matrix(dir / (name + "_mean.csv"), m.mean);
  write_csv_matrix(dir / (name + "_m2.csv"), m.m2);
}

Eigen::MatrixXd read_shaped(const fs::path& path, Index rows, Index cols) {
  if (rows == 0 || cols == 0) return Eigen::MatrixXd(rows, cols);
  Eigen::MatrixXd m = read_csv_matrix(path);
  if (m.rows() != rows || m.cols() != cols) {
    throw SchemaError(path.string() + ": expected " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ", found " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()));
  }
  return m;
}

RunningMoments read_moments(const fs::path& dir, const std::string& name, Index rows, Index cols,
                            Index count) {
  RunningMoments m;
  m.mean = read_shaped(dir / (name + "_mean.csv"), rows, cols);
  m.m2 = read_shaped(dir / (name + "_m2.csv"), rows, cols);
  m.count = count;
  return m;
}

void write_matrix_empty_ok(const fs::path& path, const Eigen::MatrixXd& m) {
  if (m.size() == 0) return;
  write_csv_matrix(path, m);
}

}  // namespace

void write_chain(const fs::path& dir, const ChainOutput& c, const ChainMeta& meta) {
  json s;
  s["K"] = c.K;
  s["P"] = c.P;
  s["N"] = c.N;
  s["T"] = c.T;
  s["n_draws"] = c.n_draws;
  s["contrast"] = std::vector<double>(c.contrast.data(), c.contrast.data() + c.contrast.size());
  s["delta_e"] = c.delta_e;
  s["has_cpo"] = c.has_cpo;
  s["mode"] = meta.mode;
  s["P0"] = meta.P0;
  s["config_hash"] = meta.config_hash;
  s["seed"] = c.config.seed;
  s["sampler"] = {{"n_burnin", c.config.n_burnin},     {"n_samples", c.config.n_samples},
                  {"thin", c.config.thin},             {"sw_period", c.config.sw_period},
                  {"randomized_scan", c.config.randomized_scan},
                  {"store_draws", c.config.store.draws}, {"store_lpml", c.config.store.lpml},
                  {"clamp_order", c.config.clamp_order}};
  s["volume"] = header_json(meta.volume);
  s["has_draws"] = !c.w_draws.empty();
  write_file_atomic(dir / "summary.json", s.dump(2) + "\n");

  write_moments(dir, "w", c.w);
  if (c.P > 0) write_moments(dir, "a", c.a);
  write_moments(dir, "lambda", c.lambda);
  write_moments(dir, "alpha", c.alpha);
  if (c.P > 0) {
    write_moments(dir, "tau", c.tau);
    write_csv_matrix(dir / "gamma_count.csv", c.gamma_count);
  }
  write_csv_matrix(dir / "max_order_sum.csv", c.max_order_sum);
  write_csv_matrix(dir / "exceed_count.csv", c.exceed_count);
  if (c.has_cpo) {
    Eigen::MatrixXd cpo(c.N, 2);
    cpo.col(0) = c.cpo_max;
    cpo.col(1) = c.cpo_sum;
    write_csv_matrix(dir / "cpo.csv", cpo, {"max_neg_loglik", "scaled_sum"});
  }
  Eigen::VectorXd trace = Eigen::Map<const Eigen::VectorXd>(c.loglik_trace.data(),
                                                            static_cast<Index>(c.loglik_trace.size()));
  write_matrix_empty_ok(dir / "loglik_trace.csv", trace);

  if (!c.w_draws.empty()) {
    std::string w, a;
    for (const auto& m : c.w_draws) w += matrix_bytes(m);
    for (const auto& m : c.a_draws) a += matrix_bytes(m);
    write_file_atomic(dir / "w_draws.bin", w);
    write_file_atomic(dir / "a_draws.bin", a);
    write_file_atomic(dir / "lambda_draws.bin", matrix_bytes(c.lambda_draws));
    write_file_atomic(dir / "loglik_draws.bin", matrix_bytes(c.loglik_draws));
  }
}

ChainOutput read_chain(const fs::path& dir, ChainMeta* meta) {
  const json s = parse_json(read_file(dir / "summary.json"), (dir / "summary.json").string());
  ChainOutput c;
  try {
    c.K = s.at("K").get<Index>();
    c.P = s.at("P").get<Index>();
    c.N = s.at("N").get<Index>();
    c.T = s.at("T").get<Index>();
    c.n_draws = s.at("n_draws").get<Index>();
    const auto contrast = s.at("contrast").get<std::vector<double>>();
    c.contrast = Eigen::Map<const Eigen::VectorXd>(contrast.data(), static_cast<Index>(contrast.size()));
    c.delta_e = s.at("delta_e").get<double>();
    c.has_cpo = s.at("has_cpo").get<bool>();
    c.config.seed = s.at("seed").get<std::uint64_t>();
    const json& sc = s.at("sampler");
    c.config.n_burnin = sc.at("n_burnin").get<Index>();
    c.config.n_samples = sc.at("n_samples").get<Index>();
    c.config.thin = sc.at("thin").get<Index>();
    c.config.sw_period = sc.at("sw_period").get<Index>();
    c.config.randomized_scan = sc.at("randomized_scan").get<bool>();
    c.config.store.draws = sc.at("store_draws").get<bool>();
    c.config.store.lpml = sc.at("store_lpml").get<bool>();
    c.config.clamp_order = sc.at("clamp_order").get<Index>();
    if (meta) {
      meta->mode = s.at("mode").get<std::string>();
      meta->P0 = s.at("P0").get<Index>();
      meta->config_hash = s.at("config_hash").get<std::string>();
      meta->volume = header_from_json(s.at("volume"), (dir / "summary.json").string());
    }
  } catch (const json::exception& e) {
    throw SchemaError((dir / "summary.json").string() + ": " + e.what());
  }

  const Index M = c.n_draws;
  c.w = read_moments(dir, "w", c.K, c.N, M);
  c.a = c.P > 0 ? read_moments(dir, "a", c.P, c.N, M) : RunningMoments{};
  if (c.P == 0) c.a.reset(0, c.N);
  c.lambda = read_moments(dir, "lambda", 1, c.N, M);
  c.alpha = read_moments(dir, "alpha", c.K, 1, M);
  if (c.P > 0) {
    c.tau = read_moments(dir, "tau", c.P, 1, M);
    c.gamma_count = read_shaped(dir / "gamma_count.csv", c.P, c.N);
  } else {
    c.tau.reset(0, 1);
    c.gamma_count = Eigen::MatrixXd(0, c.N);
  }
  c.max_order_sum = read_shaped(dir / "max_order_sum.csv", c.N, 1).col(0);
  c.exceed_count = read_shaped(dir / "exceed_count.csv", c.N, 1).col(0);
  if (c.has_cpo) {
    const Eigen::MatrixXd cpo = read_csv_matrix(dir / "cpo.csv");
    if (cpo.rows() != c.N || cpo.cols() != 2) throw SchemaError("cpo.csv has the wrong shape");
    c.cpo_max = cpo.col(0);
    c.cpo_sum = cpo.col(1);
  }
  if (M > 0 && fs::exists(dir / "loglik_trace.csv")) {
    const Eigen::VectorXd tr = read_shaped(dir / "loglik_trace.csv", M, 1).col(0);
    c.loglik_trace.assign(tr.data(), tr.data() + tr.size());
  }
  if (s.value("has_draws", false)) {
    const std::string w = read_file(dir / "w_draws.bin");
    const std::string a = read_file(dir / "a_draws.bin");
    const Eigen::MatrixXd wd = matrix_from_bytes(w, M * c.K, c.N, "w_draws.bin");
    const Eigen::MatrixXd ad = matrix_from_bytes(a, M * c.P, c.N, "a_draws.bin");
    for (Index m = 0; m < M; ++m) {
      c.w_draws.push_back(wd.middleRows(m * c.K, c.K));
      c.a_draws.push_back(ad.middleRows(m * c.P, c.P));
    }
    c.lambda_draws = matrix_from_bytes(read_file(dir / "lambda_draws.bin"), M, c.N, "lambda_draws.bin");
    c.loglik_draws = matrix_from_bytes(read_file(dir / "loglik_draws.bin"), M, c.N, "loglik_draws.bin");
  }
  return c;
}

}  // namespace svaro::io
