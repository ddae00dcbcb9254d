#include "cli.hpp"

#include "svaro/diagnostics.hpp"
#include "svaro/errors.hpp"
#include "svaro/explore.hpp"
#include "svaro/io.hpp"
#include "svaro/ising.hpp"
#include "svaro/sampler.hpp"
#include "svaro/simulate.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace svaro::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void apply_sets(io::RunConfig& config, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    io::apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

Eigen::VectorXd parse_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

Dataset load_dataset(const std::string& volume, const std::string& design, Index P) {
  if (volume.empty()) throw InvalidArgument("no data volume given (--data or config 'volume')");
  if (design.empty()) throw InvalidArgument("no design given (--design or config 'design')");
  io::Volume v = io::read_volume(volume);
  Eigen::MatrixXd X = io::read_design(design);
  LatticeGraph graph = io::graph_from_header(v.header);
  return make_dataset(std::move(v.data), std::move(X), std::move(graph), P);
}

void write_orders(const fs::path& base, const std::vector<int>& orders, Index P,
                  const LatticeGraph& graph, bool pgm) {
  Eigen::VectorXd v(static_cast<Index>(orders.size()));
  for (std::size_t i = 0; i < orders.size(); ++i) v(static_cast<Index>(i)) = orders[i];
  io::write_map(base, v, graph, pgm);
  const auto hist = order_histogram(orders, P);
  Eigen::MatrixXd h(static_cast<Index>(hist.size()), 2);
  for (std::size_t p = 0; p < hist.size(); ++p) {
    h(static_cast<Index>(p), 0) = static_cast<double>(p);
    h(static_cast<Index>(p), 1) = static_cast<double>(hist[p]);
  }
  fs::path hp = base;
  hp += "_histogram.csv";
  io::write_csv_matrix(hp, h, {"order", "voxels"});
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string preset;
  std::uint64_t seed = 1;
  std::string out;
  std::vector<std::string> sets;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  io::RunConfig rc = a.config.empty() ? io::RunConfig{} : io::load_run_config(a.config);
  if (!a.preset.empty()) io::apply_override(rc, "simulation.preset", "\"" + a.preset + "\"");
  apply_sets(rc, a.sets);
  rc.sampler.seed = a.seed;
  const std::string hash = io::config_hash(rc);
  const Simulation sim = simulate(rc.simulation, a.seed);
  io::write_simulation(a.out, sim, a.seed, hash);
  out << "simulated N=" << sim.dataset.N() << " T=" << sim.dataset.T() << " P=" << sim.dataset.P
      << " seed=" << a.seed << " config_hash=" << hash << " out=" << a.out << "\n";
  return kOk;
}

struct FitArgs {
  std::string config;
  std::string data;
  std::string design;
  std::string out;
  std::optional<std::string> mode;
  std::optional<Index> P0;
  std::optional<Index> P;
  std::optional<Index> burnin;
  std::optional<Index> samples;
  std::optional<Index> thin;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool store_draws = false;
  std::vector<std::string> sets;
};

int run_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  io::RunConfig rc = a.config.empty() ? io::RunConfig{} : io::load_run_config(a.config);
  if (!a.data.empty()) rc.volume = a.data;
  if (!a.design.empty()) rc.design = a.design;
  if (!a.out.empty()) rc.output = a.out;
  if (a.mode) io::apply_override(rc, "mode", "\"" + *a.mode + "\"");
  if (a.P0) rc.P0 = *a.P0;
  if (a.P) io::apply_override(rc, "hyper.P", std::to_string(*a.P));
  if (a.burnin) rc.sampler.n_burnin = *a.burnin;
  if (a.samples) rc.sampler.n_samples = *a.samples;
  if (a.thin) rc.sampler.thin = *a.thin;
  if (a.seed) rc.sampler.seed = *a.seed;
  if (a.store_draws) rc.sampler.store.draws = true;
  apply_sets(rc, a.sets);
  // The thread count never changes the output, so it stays out of the hash.
  if (a.threads) rc.sampler.threads = *a.threads;
  if (rc.output.empty()) throw InvalidArgument("no output directory given (--out or config 'output')");

  const Dataset data = load_dataset(rc.volume, rc.design, rc.hyper.P);
  io::RunConfig hashed = rc;
  hashed.sampler.threads = 0;
  const std::string hash = io::config_hash(hashed);

  // Advisory only: flag orders whose field prior sits below the
  // phase-transition bound for this dataset's size.
  const IsingBound bound = ising_bounds({static_cast<double>(data.N()), 0.1, 0.05, static_cast<double>(data.T())});
  for (std::size_t p = 0; p < rc.hyper.beta0.size(); ++p) {
    if (!bound.satisfies_lower(rc.hyper.beta0[p], rc.hyper.beta1[p])) {
      err << "warning: order " << p + 1 << " has beta0 + " << fmt(bound.coef) << " beta1 below " << fmt(bound.rhs)
          << "\n";
    }
  }

  const ChainOutput chain = rc.mode == "svaro"
                                ? run_chain(data, rc.hyper, rc.sampler)
                                : fixed_order_baseline(data, rc.hyper, rc.sampler, rc.P0);
  io::ChainMeta meta;
  meta.volume = io::header_for(data.graph, data.T());
  meta.mode = rc.mode;
  meta.P0 = rc.mode == "svaro" ? 0 : rc.P0;
  meta.config_hash = hash;
  io::write_chain(rc.output, chain, meta);
  out << "fit mode=" << rc.mode << " N=" << chain.N << " P=" << chain.P << " draws=" << chain.n_draws
      << " seed=" << rc.sampler.seed << " config_hash=" << hash;
  if (chain.has_cpo) out << " lpml=" << fmt(lpml(chain));
  out << " out=" << rc.output << "\n";
  return kOk;
}

struct PpmArgs {
  std::string chain;
  std::vector<double> contrast;
  std::optional<double> delta_e;
  double delta_p = 0.95;
  std::string out;
  bool pgm = false;
};

int run_ppm(const PpmArgs& a, std::ostream& out) {
  io::ChainMeta meta;
  const ChainOutput chain = io::read_chain(a.chain, &meta);
  const Eigen::VectorXd c = a.contrast.empty() ? chain.contrast : parse_vector(a.contrast);
  const double de = a.delta_e.value_or(chain.delta_e);
  if (!(a.delta_p > 0.0 && a.delta_p < 1.0)) throw InvalidArgument("--delta-p must be in (0, 1)");
  const Ppm p = ppm(chain, c, de);
  const auto active = threshold_ppm(p.values, a.delta_p);
  const LatticeGraph graph = io::graph_from_header(meta.volume);
  fs::path base = a.out;
  io::write_map(fs::path(base) += "_ppm", p.values, graph, a.pgm);
  Eigen::VectorXd av(static_cast<Index>(active.size()));
  Index count = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    av(static_cast<Index>(i)) = active[i];
    count += active[i];
  }
  io::write_map(fs::path(base) += "_active", av, graph, a.pgm);
  out << "ppm delta_e=" << fmt(de) << " delta_p=" << fmt(a.delta_p) << " draws=" << p.n_draws
      << " active=" << count << "/" << chain.N << " config_hash=" << meta.config_hash << "\n";
  return kOk;
}

int run_lpml(const std::string& chain_dir, std::ostream& out) {
  io::ChainMeta meta;
  const ChainOutput chain = io::read_chain(chain_dir, &meta);
  out << "lpml=" << fmt(lpml(chain)) << " draws=" << chain.n_draws
      << " config_hash=" << meta.config_hash << "\n";
  return kOk;
}

int run_mse(const std::string& chain_dir, const std::string& truth_dir, std::ostream& out) {
  const ChainOutput chain = io::read_chain(chain_dir);
  const GroundTruth truth = io::read_truth(truth_dir);
  const MseTable t = mse_table(chain, truth);
  out << "parameter,mse\n";
  for (std::size_t i = 0; i < t.names.size(); ++i) out << t.names[i] << "," << fmt(t.values[i]) << "\n";
  return kOk;
}

struct SensitivityArgs {
  std::string chain;
  std::string truth;
  std::vector<double> grid;
  std::string out;
};

int run_sensitivity(const SensitivityArgs& a, std::ostream& out) {
  const ChainOutput chain = io::read_chain(a.chain);
  const GroundTruth truth = io::read_truth(a.truth);
  const Ppm p = ppm(chain, chain.contrast, chain.delta_e);
  const auto grid = a.grid.empty() ? default_sensitivity_grid() : a.grid;
  const SensitivityCurve curve = sensitivity_curve(p.values, truth.active, grid);
  Eigen::MatrixXd m(static_cast<Index>(grid.size()), 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    m(static_cast<Index>(i), 0) = curve.grid[i];
    m(static_cast<Index>(i), 1) = curve.sensitivity[i];
  }
  if (!a.out.empty()) io::write_csv_matrix(a.out, m, {"delta_p", "sensitivity"});
  out << "delta_p,sensitivity\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << fmt(curve.grid[i]) << "," << fmt(curve.sensitivity[i]) << "\n";
  }
  return kOk;
}

int run_order_map(const std::string& chain_dir, const std::string& rule, const std::string& base,
                  bool pgm, std::ostream& out) {
  io::ChainMeta meta;
  const ChainOutput chain = io::read_chain(chain_dir, &meta);
  const OrderRule r = rule == "rounded" ? OrderRule::kRoundedMeanMaxOrder : OrderRule::kMedianProbability;
  const OrderMap m = ar_order_map(chain, r);
  write_orders(base, m.orders, chain.P, io::graph_from_header(meta.volume), pgm);
  out << "order histogram:";
  for (std::size_t p = 0; p < m.histogram.size(); ++p) out << " " << p << ":" << m.histogram[p];
  out << "\n";
  return kOk;
}

int run_explore(const std::string& data, const std::string& design, Index p_max,
                const std::string& base, bool pgm, int threads, std::ostream& out) {
  const Dataset d = load_dataset(data, design, 0);
  const auto orders = ar_order_map_exploratory(d, p_max, threads);
  write_orders(base, orders, p_max, d.graph, pgm);
  const auto hist = order_histogram(orders, p_max);
  out << "order histogram:";
  for (std::size_t p = 0; p < hist.size(); ++p) out << " " << p << ":" << hist[p];
  out << "\n";
  return kOk;
}

struct BoundsArgs {
  double n = 0, pi = 0.1, r2 = 0.05, t = 0;
  std::optional<double> beta0, beta1;
};

int run_bounds(const BoundsArgs& a, std::ostream& out) {
  const IsingBound b = ising_bounds({a.n, a.pi, a.r2, a.t});
  char buf[160];
  std::snprintf(buf, sizeof buf, "edge_length=%.4f coef=%.2f rhs=%.2f", b.edge_length, b.coef, b.rhs);
  out << buf << "\n";
  std::snprintf(buf, sizeof buf, "constraint: beta0 + %.2f beta1 >= %.2f; high orders: beta0 + 3 beta1 < 0",
                b.coef, b.rhs);
  out << buf << "\n";
  if (a.beta0 && a.beta1) {
    out << "beta0=" << fmt(*a.beta0) << " beta1=" << fmt(*a.beta1)
        << " lower=" << (b.satisfies_lower(*a.beta0, *a.beta1) ? "ok" : "violated")
        << " sparsity=" << (IsingBound::satisfies_sparsity(*a.beta0, *a.beta1) ? "ok" : "violated")
        << "\n";
  }
  return kOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return kSchema;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  if (dynamic_cast<const InvalidArgument*>(&e)) return kInvalidArgument;
  return kOther;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatially varying autoregressive-order fMRI model", "svaro"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sc_sim = app.add_subcommand("simulate", "Generate a synthetic dataset and its ground truth");
  sc_sim->add_option("--config", sim.config, "Run configuration JSON");
  sc_sim->add_option("--preset", sim.preset, "sim1 (heterogeneous orders) or sim2 (AR(1) field)")
      ->check(CLI::IsMember({"sim1", "sim2"}));
  sc_sim->add_option("--seed", sim.seed, "Random seed");
  sc_sim->add_option("--out", sim.out, "Output directory")->required();
  sc_sim->add_option("--set", sim.sets, "Override a config key, e.g. simulation.T=100");

  FitArgs fit;
  auto* sc_fit = app.add_subcommand("fit", "Run the sampler and write chain summaries");
  sc_fit->add_option("--config", fit.config, "Run configuration JSON");
  sc_fit->add_option("--data", fit.data, "Volume payload (.bin with .json sidecar)");
  sc_fit->add_option("--design", fit.design, "Design matrix CSV (T rows)");
  sc_fit->add_option("--out", fit.out, "Chain output directory");
  sc_fit->add_option("--mode", fit.mode, "svaro or fixed_order")->check(CLI::IsMember({"svaro", "fixed_order"}));
  sc_fit->add_option("--P0", fit.P0, "Order of the fixed-order baseline");
  sc_fit->add_option("--P", fit.P, "Maximum AR order");
  sc_fit->add_option("--burnin", fit.burnin, "Burn-in sweeps");
  sc_fit->add_option("--samples", fit.samples, "Post-burn-in sweeps");
  sc_fit->add_option("--thin", fit.thin, "Keep every thin-th sweep");
  sc_fit->add_option("--seed", fit.seed, "Random seed");
  sc_fit->add_option("--threads", fit.threads, "Worker threads (output does not depend on it)");
  sc_fit->add_flag("--store-draws", fit.store_draws, "Keep thinned draws on disk");
  sc_fit->add_option("--set", fit.sets, "Override a config key, e.g. hyper.epsilon=1e4");

  PpmArgs pa;
  auto* sc_ppm = app.add_subcommand("ppm", "Posterior probability map and thresholded activation map");
  sc_ppm->add_option("--chain", pa.chain, "Chain directory")->required();
  sc_ppm->add_option("--contrast", pa.contrast, "Contrast vector")->delimiter(',');
  sc_ppm->add_option("--delta-e", pa.delta_e, "Activation threshold on c'w");
  sc_ppm->add_option("--delta-p", pa.delta_p, "Probability threshold");
  sc_ppm->add_option("--out", pa.out, "Output base path")->required();
  sc_ppm->add_flag("--pgm", pa.pgm, "Also write 8-bit PGM previews");

  std::string lpml_chain;
  auto* sc_lpml = app.add_subcommand("lpml", "Log pseudo-marginal likelihood of a chain");
  sc_lpml->add_option("--chain", lpml_chain, "Chain directory")->required();

  std::string mse_chain, mse_truth;
  auto* sc_mse = app.add_subcommand("mse", "Posterior-mean MSE against a simulation's truth");
  sc_mse->add_option("--chain", mse_chain, "Chain directory")->required();
  sc_mse->add_option("--truth", mse_truth, "Simulation directory")->required();

  SensitivityArgs sa;
  auto* sc_sens = app.add_subcommand("sensitivity", "Sensitivity across probability thresholds");
  sc_sens->add_option("--chain", sa.chain, "Chain directory")->required();
  sc_sens->add_option("--truth", sa.truth, "Simulation directory")->required();
  sc_sens->add_option("--grid", sa.grid, "Probability thresholds")->delimiter(',');
  sc_sens->add_option("--out", sa.out, "CSV output path");

  std::string om_chain, om_rule = "median", om_out;
  bool om_pgm = false;
  auto* sc_om = app.add_subcommand("order-map", "Posterior maximum AR order per voxel");
  sc_om->add_option("--chain", om_chain, "Chain directory")->required();
  sc_om->add_option("--rule", om_rule, "median or rounded")->check(CLI::IsMember({"median", "rounded"}));
  sc_om->add_option("--out", om_out, "Output base path")->required();
  sc_om->add_flag("--pgm", om_pgm, "Also write an 8-bit PGM preview");

  std::string ex_data, ex_design, ex_out;
  Index ex_pmax = 12;
  int ex_threads = 0;
  bool ex_pgm = false;
  auto* sc_ex = app.add_subcommand("explore", "OLS residual AR orders chosen by AIC");
  sc_ex->add_option("--data", ex_data, "Volume payload")->required();
  sc_ex->add_option("--design", ex_design, "Design matrix CSV")->required();
  sc_ex->add_option("--p-max", ex_pmax, "Largest order considered");
  sc_ex->add_option("--threads", ex_threads, "Worker threads");
  sc_ex->add_option("--out", ex_out, "Output base path")->required();
  sc_ex->add_flag("--pgm", ex_pgm, "Also write an 8-bit PGM preview");

  BoundsArgs ba;
  auto* sc_b = app.add_subcommand("bounds", "Ising hyperparameter bounds");
  sc_b->add_option("--n", ba.n, "Number of voxels")->required();
  sc_b->add_option("--pi", ba.pi, "Expected inclusion proportion");
  sc_b->add_option("--r2", ba.r2, "Per-order coefficient of determination");
  sc_b->add_option("--t", ba.t, "Time-series length")->required();
  sc_b->add_option("--beta0", ba.beta0, "Check this beta0");
  sc_b->add_option("--beta1", ba.beta1, "Check this beta1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: kind=usage msg=" << one_line(e.what()) << "\n";
    return kUsage;
  }

  try {
    if (sc_sim->parsed()) return run_simulate(sim, out);
    if (sc_fit->parsed()) return run_fit(fit, out, err);
    if (sc_ppm->parsed()) return run_ppm(pa, out);
    if (sc_lpml->parsed()) return run_lpml(lpml_chain, out);
    if (sc_mse->parsed()) return run_mse(mse_chain, mse_truth, out);
    if (sc_sens->parsed()) return run_sensitivity(sa, out);
    if (sc_om->parsed()) return run_order_map(om_chain, om_rule, om_out, om_pgm, out);
    if (sc_ex->parsed()) return run_explore(ex_data, ex_design, ex_pmax, ex_out, ex_pgm, ex_threads, out);
    if (sc_b->parsed()) return run_bounds(ba, out);
  } catch (const Error& e) {
    err << "error: kind=" << e.kind() << " msg=" << one_line(e.what()) << "\n";
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: kind=io msg=" << one_line(e.what()) << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: kind=error msg=" << one_line(e.what()) << "\n";
    return kOther;
  }
  err << "error: kind=usage msg=no subcommand\n";
  return kUsage;
}

}  // namespace svaro::cli
