#include "svaro/simulate.hpp"

#include "svaro/errors.hpp"
#include "svaro/ising.hpp"
#include "svaro/sampler.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>

namespace svaro {

Eigen::VectorXd sample_gmrf(double mean, double precision_scale, const Laplacian& lap,
                            double jitter, Rng& rng) {
  if (!(precision_scale > 0.0)) throw InvalidArgument("precision_scale must be positive");
  if (!(jitter > 0.0)) {
    throw InvalidArgument("GMRF precision is singular without jitter; pass a positive jitter");
  }
  const Index n = lap.size();
  SparseMatrix Q = precision_scale * lap.StS();
  SparseMatrix eye(n, n);
  eye.setIdentity();
  Q += jitter * eye;

  Eigen::SimplicialLLT<SparseMatrix> llt(Q);
  if (llt.info() != Eigen::Success) throw NumericalError("GMRF precision factorization failed");

  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (Index i = 0; i < n; ++i) z(i) = normal(rng);
  // P Q P^T = L L^T  =>  x = P^T L^{-T} z has covariance Q^{-1}.
  const Eigen::VectorXd u = llt.matrixU().solve(z);
  Eigen::VectorXd x = llt.permutationPinv() * u;
  x.array() += mean;
  return x;
}

bool check_stationarity(const Eigen::Ref<const Eigen::VectorXd>& a) {
  const Index P = a.size();
  if (P == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(P, P);
  companion.row(0) = a.transpose();
  for (Index i = 1; i < P; ++i) companion(i, i - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return (es.eigenvalues().array().abs() < 1.0).all();
}

Eigen::VectorXd canonical_hrf(double tr) {
  // Difference of gammas: peak at 6 s, undershoot at 16 s, ratio 1/6.
  auto gpdf = [](double t, double shape) {
    if (t <= 0.0) return 0.0;
    return std::exp((shape - 1.0) * std::log(t) - t - std::lgamma(shape));
  };
  const Index len = static_cast<Index>(std::floor(32.0 / tr)) + 1;
  Eigen::VectorXd h(len);
  for (Index i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) * tr;
    h(i) = gpdf(t, 6.0) - gpdf(t, 16.0) / 6.0;
  }
  return h / h.sum();
}

Eigen::MatrixXd simulation_design(Index T, double tr, Index block_length,
                                  const Eigen::VectorXd& regressor) {
  Eigen::MatrixXd X(T, 2);
  X.col(1).setOnes();
  if (regressor.size() > 0) {
    if (regressor.size() != T) throw SchemaError("regressor length must equal T");
    X.col(0) = regressor;
    return X;
  }
  Eigen::VectorXd box(T);
  for (Index t = 0; t < T; ++t) box(t) = ((t / block_length) % 2 == 1) ? 1.0 : 0.0;
  const Eigen::VectorXd h = canonical_hrf(tr);
  for (Index t = 0; t < T; ++t) {
    double s = 0.0;
    for (Index j = 0; j < h.size() && j <= t; ++j) s += h(j) * box(t - j);
    X(t, 0) = s;
  }
  const double peak = X.col(0).maxCoeff();
  if (peak > 0.0) X.col(0) /= peak;
  return X;
}

SimConfig sim1_preset() { return SimConfig{}; }

SimConfig sim2_preset() {
  SimConfig c;
  c.preset = "sim2";
  c.design = SimDesign::kGlmAr;
  c.P = 1;
  c.fit_P = 12;
  return c;
}

std::vector<int> GroundTruth::max_order() const {
  std::vector<int> out(static_cast<std::size_t>(Gamma.cols()));
  for (Index n = 0; n < Gamma.cols(); ++n) out[n] = max_included_order(Gamma, n);
  return out;
}

std::pair<std::vector<std::uint8_t>, double> top_fraction_active(const Eigen::VectorXd& values,
                                                                 double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("active fraction must be in (0, 1]");
  const Index N = values.size();
  std::vector<double> sorted(values.data(), values.data() + N);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const Index count = std::max<Index>(1, static_cast<Index>(std::ceil(fraction * static_cast<double>(N) - 1e-9)));
  const double threshold = sorted[count - 1];
  std::vector<std::uint8_t> active(static_cast<std::size_t>(N));
  for (Index n = 0; n < N; ++n) active[n] = values(n) >= threshold ? 1 : 0;
  return {active, threshold};
}

Eigen::VectorXd simulate_ar_noise(const Eigen::Ref<const Eigen::VectorXd>& a, double lambda,
                                  Index T, Rng& rng) {
  const Index P = a.size();
  const Index warmup = 10 * P;
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(lambda));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(warmup + T);
  for (Index t = 0; t < warmup + T; ++t) {
    double v = normal(rng);
    for (Index p = 1; p <= P && p <= t; ++p) v += a(p - 1) * e(t - p);
    e(t) = v;
  }
  return e.tail(T);
}

namespace {

struct Common {
  LatticeGraph graph;
  std::shared_ptr<const Laplacian> lap;
  Eigen::MatrixXd X;
  Eigen::VectorXd contrast;
};

Common prepare(const SimConfig& c) {
  if (c.T <= std::max<Index>(c.P, c.fit_P)) throw InvalidArgument("simulation needs T > P");
  Common out;
  std::vector<bool> mask = c.mask;
  if (mask.empty()) {
    Index n = 1;
    for (int d : c.dims) n *= d;
    mask.assign(static_cast<std::size_t>(n), true);
  }
  out.graph = build_lattice(c.dims, std::move(mask));
  out.lap = std::make_shared<const Laplacian>(out.graph);
  out.X = simulation_design(c.T, c.tr, c.block_length, c.regressor);
  out.contrast = c.contrast.size() > 0 ? c.contrast : Eigen::VectorXd::Unit(2, 0);
  if (out.contrast.size() != 2) throw InvalidArgument("contrast must have length 2");
  return out;
}

Eigen::MatrixXd simulate_w(const SimConfig& c, const Laplacian& lap, std::uint64_t seed) {
  Eigen::MatrixXd W(2, lap.size());
  Rng r1 = make_stream(seed, Stage::kSimField, 0);
  Rng r2 = make_stream(seed, Stage::kSimField, 1);
  W.row(0) = sample_gmrf(c.w1_mean, c.w1_precision_scale, lap,
                         c.jitter_factor * c.w1_precision_scale, r1).transpose();
  W.row(1) = sample_gmrf(c.w2_mean, c.w2_precision_scale, lap,
                         c.jitter_factor * c.w2_precision_scale, r2).transpose();
  return W;
}

Simulation assemble(const SimConfig& c, Common common, GroundTruth truth, std::uint64_t seed) {
  const Index N = common.graph.n_voxels();
  Eigen::MatrixXd Y(c.T, N);
  for (Index n = 0; n < N; ++n) {
    Rng rng = make_stream(seed, Stage::kSimNoise, static_cast<std::uint64_t>(n));
    Y.col(n) = common.X * truth.W.col(n) + simulate_ar_noise(truth.A.col(n), truth.lambda(n), c.T, rng);
  }
  const Eigen::VectorXd contrast_values = truth.W.transpose() * common.contrast;
  std::tie(truth.active, truth.active_threshold) = top_fraction_active(contrast_values, c.active_fraction);
  const Index fit_p = c.fit_P >= 0 ? c.fit_P : c.P;
  Simulation sim{make_dataset(std::move(Y), std::move(common.X), std::move(common.graph), fit_p),
                 std::move(truth)};
  return sim;
}

}  // namespace

Simulation simulate_svaro(const SimConfig& c, std::uint64_t seed) {
  Common common = prepare(c);
  const Index N = common.graph.n_voxels();
  GroundTruth truth;
  truth.Gamma = IndicatorMatrix::Zero(c.P, N);
  const IsingSamplerConfig ising{c.ising_sweeps, 0, c.sw_period};
  for (Index p = 0; p < c.P; ++p) {
    Rng rng = make_stream(seed, Stage::kSimIsing, static_cast<std::uint64_t>(p));
    const auto draw = sample_ising_prior(common.graph, c.beta0, c.beta1, ising, rng);
    for (Index n = 0; n < N; ++n) truth.Gamma(p, n) = draw.last[n];
  }

  truth.A = Eigen::MatrixXd::Zero(c.P, N);
  std::normal_distribution<double> slab(0.0, 1.0 / std::sqrt(c.tau));
  for (Index n = 0; n < N; ++n) {
    Rng rng = make_stream(seed, Stage::kSimAr, static_cast<std::uint64_t>(n));
    Eigen::VectorXd a = Eigen::VectorXd::Zero(c.P);
    Index attempt = 0;
    do {
      if (attempt++ >= c.retry_cap) {
        throw NumericalError("no stationary AR draw at voxel " + std::to_string(n) + " after " +
                             std::to_string(c.retry_cap) +
                             " attempts; increase tau or make beta0 more negative");
      }
      for (Index p = 0; p < c.P; ++p) a(p) = truth.Gamma(p, n) ? slab(rng) : 0.0;
    } while (!check_stationarity(a));
    truth.A.col(n) = a;
  }

  truth.W = simulate_w(c, *common.lap, seed);
  truth.lambda = Eigen::VectorXd::Constant(N, c.lambda);
  return assemble(c, std::move(common), std::move(truth), seed);
}

Simulation simulate_glmar(const SimConfig& c, std::uint64_t seed) {
  Common common = prepare(c);
  const Index N = common.graph.n_voxels();
  if (c.P < 1) throw InvalidArgument("GLM-AR simulation needs P >= 1");
  GroundTruth truth;
  truth.Gamma = clamped_indicators(c.P, N, c.P);
  truth.A = Eigen::MatrixXd::Zero(c.P, N);
  Rng rng = make_stream(seed, Stage::kSimAr, 0);
  Index attempt = 0;
  while (true) {
    if (attempt++ >= c.retry_cap) {
      throw NumericalError("no stationary a_1 field after " + std::to_string(c.retry_cap) +
                           " attempts; increase ar_precision_scale or the jitter");
    }
    const Eigen::VectorXd field = sample_gmrf(c.ar_mean, c.ar_precision_scale, *common.lap,
                                              c.jitter_factor * c.ar_precision_scale, rng);
    if ((field.array().abs() < 1.0).all()) {
      truth.A.row(0) = field.transpose();
      break;
    }
  }
  truth.W = simulate_w(c, *common.lap, seed);
  truth.lambda = Eigen::VectorXd::Constant(N, c.lambda);
  return assemble(c, std::move(common), std::move(truth), seed);
}

Simulation simulate(const SimConfig& config, std::uint64_t seed) {
  return config.design == SimDesign::kSvaro ? simulate_svaro(config, seed)
                                            : simulate_glmar(config, seed);
}

}  // namespace svaro
