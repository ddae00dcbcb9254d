#include "svaro/sampler.hpp"

#include "parallel.hpp"
#include "svaro/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace svaro {
namespace {

std::span<std::uint8_t> gamma_row(ModelState& s, Index p) {
  return {s.Gamma.data() + p * s.Gamma.cols(), static_cast<std::size_t>(s.Gamma.cols())};
}

std::span<const std::uint8_t> gamma_row(const ModelState& s, Index p) {
  return {s.Gamma.data() + p * s.Gamma.cols(), static_cast<std::size_t>(s.Gamma.cols())};
}

Eigen::VectorXd spike_slab_field(Index p, const ModelState& state, const Hyperparams& hyper) {
  const Index N = state.A.cols();
  Eigen::VectorXd h(N);
  for (Index n = 0; n < N; ++n) h(n) = spike_slab_log_ratio(state.A(p, n), state.tau(p), hyper.epsilon);
  return h;
}

NeighborRule neighbor_rule(const Hyperparams& hyper) {
  return hyper.on_count_neighbor_term ? NeighborRule::kOnCount : NeighborRule::kAgreement;
}

}  // namespace

GaussianConditional w_conditional(Index n, const ModelState& state, const Dataset& data,
                                  const Hyperparams& hyper) {
  const Index T = data.T();
  const Index P = data.P;
  const Index K = data.K();
  const Index m = T - P;
  const double lam = state.lambda(n);

  // AR-whitened design and response over the conditioned range.
  Eigen::MatrixXd xw = data.X_full.bottomRows(m);
  Eigen::VectorXd yw = data.Y.col(n).tail(m);
  for (Index p = 1; p <= P; ++p) {
    const double a = state.A(p - 1, n);
    if (a == 0.0) continue;
    xw.noalias() -= a * data.X_full.middleRows(P - p, m);
    yw.noalias() -= a * data.Y.col(n).segment(P - p, m);
  }

  const Laplacian& lap = *data.laplacian;
  const double qnn = lap.sts_diag(n) + hyper.spatial_ridge;
  Eigen::VectorXd coupled = Eigen::VectorXd::Zero(K);
  lap.for_each_offdiag(n, [&](Index j, double v) { coupled.noalias() += v * state.W.col(j); });

  GaussianConditional c;
  c.precision = lam * (xw.transpose() * xw);
  c.precision.diagonal() += qnn * state.alpha;
  const Eigen::VectorXd linear = lam * (xw.transpose() * yw) - state.alpha.cwiseProduct(coupled);
  c.mean = c.precision.llt().solve(linear);
  return c;
}

GaussianConditional a_conditional(Index n, const ModelState& state, const Eigen::MatrixXd& gram,
                                  const Hyperparams& hyper) {
  const Index P = state.A.rows();
  const double lam = state.lambda(n);
  GaussianConditional c;
  c.precision = lam * gram.bottomRightCorner(P, P);
  for (Index p = 0; p < P; ++p) {
    const double d = state.Gamma(p, n) != 0 ? 1.0 : hyper.epsilon;
    c.precision(p, p) += state.tau(p) * d;
  }
  const Eigen::VectorXd linear = lam * gram.col(0).tail(P);
  c.mean = c.precision.llt().solve(linear);
  return c;
}

GaussianConditional a_conditional(Index n, const ModelState& state, const Dataset& data,
                                  const Hyperparams& hyper) {
  const Eigen::MatrixXd gram = lag_gram(residuals(data, state.W, n), data.P);
  return a_conditional(n, state, gram, hyper);
}

GammaConditional alpha_conditional(Index k, const ModelState& state, const Dataset& data,
                                   const Hyperparams& hyper) {
  const Eigen::VectorXd row = state.W.row(k).transpose();
  const double quad = data.laplacian->quadratic_form(row) + hyper.spatial_ridge * row.squaredNorm();
  const double N = static_cast<double>(state.W.cols());
  return {0.5 * N + hyper.q1, 1.0 / (0.5 * quad + 1.0 / hyper.q2)};
}

GammaConditional tau_conditional(Index p, const ModelState& state, const Hyperparams& hyper) {
  const Index N = state.A.cols();
  double ss = 0.0;
  for (Index n = 0; n < N; ++n) {
    const double d = state.Gamma(p, n) != 0 ? 1.0 : hyper.epsilon;
    ss += d * state.A(p, n) * state.A(p, n);
  }
  return {0.5 * static_cast<double>(N) + hyper.u1, 1.0 / (0.5 * ss + 1.0 / hyper.u2)};
}

GammaConditional lambda_conditional(Index n, const ModelState& state, const Eigen::MatrixXd& gram,
                                    Index n_obs, const Hyperparams& hyper) {
  const double ssr = innovation_ssr(gram, state.A.col(n));
  return {0.5 * static_cast<double>(n_obs) + hyper.r1, 1.0 / (0.5 * ssr + 1.0 / hyper.r2)};
}

GammaConditional lambda_conditional(Index n, const ModelState& state, const Dataset& data,
                                    const Hyperparams& hyper) {
  const Eigen::MatrixXd gram = lag_gram(residuals(data, state.W, n), data.P);
  return lambda_conditional(n, state, gram, data.T() - data.P, hyper);
}

double gamma_site_log_odds(Index p, Index n, const ModelState& state, const Dataset& data,
                           const Hyperparams& hyper) {
  const double h = spike_slab_log_ratio(state.A(p, n), state.tau(p), hyper.epsilon);
  return ising_site_log_odds(data.graph, gamma_row(state, p), n, hyper.beta0[p], hyper.beta1[p], h,
                             neighbor_rule(hyper));
}

Eigen::VectorXd draw_gaussian(const GaussianConditional& c, Rng& rng) {
  const Index dim = c.mean.size();
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(dim);
  for (Index i = 0; i < dim; ++i) z(i) = normal(rng);
  if (dim == 0) return z;

  Eigen::LLT<Eigen::MatrixXd> llt(c.precision);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jittered = c.precision;
    jittered.diagonal().array() += 1e-10 * c.precision.trace() / static_cast<double>(dim);
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
  }
  // precision = L L^T, so L^{-T} z has covariance precision^{-1}.
  return c.mean + llt.matrixU().solve(z);
}

double draw_gamma(const GammaConditional& c, Rng& rng) {
  std::gamma_distribution<double> gamma(c.shape, c.scale);
  const double x = gamma(rng);
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw NumericalError("gamma draw is not positive and finite");
  }
  return x;
}

Eigen::VectorXd update_w(Index n, const ModelState& state, const Dataset& data,
                         const Hyperparams& hyper, Rng& rng) {
  return draw_gaussian(w_conditional(n, state, data, hyper), rng);
}

Eigen::VectorXd update_a(Index n, const ModelState& state, const Dataset& data,
                         const Hyperparams& hyper, Rng& rng) {
  return draw_gaussian(a_conditional(n, state, data, hyper), rng);
}

void update_gamma_gibbs(Index p, ModelState& state, const Dataset& data, const Hyperparams& hyper,
                        Rng& rng, std::span<const Index> order) {
  const Eigen::VectorXd h = spike_slab_field(p, state, hyper);
  ising_gibbs_sweep(data.graph, gamma_row(state, p), hyper.beta0[p], hyper.beta1[p],
                    {h.data(), static_cast<std::size_t>(h.size())}, rng, neighbor_rule(hyper), order);
}

void update_gamma_sw(Index p, ModelState& state, const Dataset& data, const Hyperparams& hyper,
                     Rng& rng) {
  const Eigen::VectorXd h = spike_slab_field(p, state, hyper);
  ising_sw_step(data.graph, gamma_row(state, p), hyper.beta0[p], hyper.beta1[p],
                {h.data(), static_cast<std::size_t>(h.size())}, rng);
}

double update_alpha(Index k, const ModelState& state, const Dataset& data, const Hyperparams& hyper,
                    Rng& rng) {
  return draw_gamma(alpha_conditional(k, state, data, hyper), rng);
}

double update_tau(Index p, const ModelState& state, const Hyperparams& hyper, Rng& rng) {
  return draw_gamma(tau_conditional(p, state, hyper), rng);
}

double update_lambda(Index n, const ModelState& state, const Dataset& data,
                     const Hyperparams& hyper, Rng& rng) {
  return draw_gamma(lambda_conditional(n, state, data, hyper), rng);
}

// ---------------------------------------------------------------------------

void SamplerConfig::validate(Index P) const {
  if (n_burnin < 0 || n_samples < 0) throw InvalidArgument("burn-in and sample counts must be >= 0");
  if (thin < 1) throw InvalidArgument("thin must be >= 1");
  if (sw_period < 0) throw InvalidArgument("sw_period must be >= 0");
  if (clamp_order > P) throw InvalidArgument("fixed order P0 must satisfy 0 <= P0 <= P");
}

void RunningMoments::reset(Index rows, Index cols) {
  mean = Eigen::MatrixXd::Zero(rows, cols);
  m2 = Eigen::MatrixXd::Zero(rows, cols);
  count = 0;
}

void RunningMoments::push(const Eigen::MatrixXd& x) {
  ++count;
  const Eigen::MatrixXd delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2.array() += delta.array() * (x - mean).array();
}

Eigen::MatrixXd RunningMoments::variance() const {
  if (count < 2) return Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
  return m2 / static_cast<double>(count - 1);
}

Eigen::MatrixXd ChainOutput::gamma_freq() const {
  if (n_draws == 0) return Eigen::MatrixXd::Zero(gamma_count.rows(), gamma_count.cols());
  return gamma_count / static_cast<double>(n_draws);
}

IndicatorMatrix clamped_indicators(Index P, Index N, Index P0) {
  IndicatorMatrix g = IndicatorMatrix::Zero(P, N);
  g.topRows(std::clamp<Index>(P0, 0, P)).setConstant(1);
  return g;
}

Sampler::Sampler(const Dataset& data, Hyperparams hyper, SamplerConfig config)
    : data_(data), hyper_(std::move(hyper)), config_(config), coloring_(color_for_sweep(data.graph)) {
  if (hyper_.P != data_.P) throw InvalidArgument("hyperparameter P does not match dataset P");
  hyper_.validate(data_.K());
  config_.validate(data_.P);
  grams_.resize(static_cast<std::size_t>(data_.N()));
  threads_ = detail::resolve_threads(config_.threads);
}

ModelState Sampler::initial_state() const {
  const Index K = data_.K(), P = data_.P, N = data_.N();
  ModelState s;
  const auto X = data_.design();
  Eigen::MatrixXd xtx = X.transpose() * X;
  xtx.diagonal().array() += 1e-6 * std::max(xtx.trace() / static_cast<double>(K), 1e-12);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  s.W = ldlt.solve(X.transpose() * data_.Y.bottomRows(data_.T() - P));
  s.A = Eigen::MatrixXd::Zero(P, N);
  s.Gamma = config_.clamp_order >= 0 ? clamped_indicators(P, N, config_.clamp_order)
                                     : IndicatorMatrix::Zero(P, N);
  s.alpha = Eigen::VectorXd::Constant(K, hyper_.q1 * hyper_.q2);
  s.tau = Eigen::VectorXd::Constant(P, hyper_.u1 * hyper_.u2);
  s.lambda = Eigen::VectorXd::Constant(N, hyper_.r1 * hyper_.r2);
  return s;
}

namespace {

[[noreturn]] void rethrow_located(const Error& e, std::uint64_t iteration, const std::string& what) {
  throw NumericalError("iteration " + std::to_string(iteration) + ", " + what + ": " + e.what());
}

}  // namespace

void Sampler::sweep(ModelState& state, std::uint64_t iteration) {
  const Index P = data_.P, N = data_.N(), K = data_.K();
  const std::uint64_t seed = config_.seed;

  // 1. Regression coefficients, color by color. Voxels of one color do not
  //    appear in each other's conditionals.
  for (const auto& group : coloring_.groups) {
    detail::parallel_for(static_cast<Index>(group.size()), threads_, [&](Index i) {
      const Index n = group[static_cast<std::size_t>(i)];
      Rng rng = make_stream(seed, Stage::kW, iteration, static_cast<std::uint64_t>(n));
      try {
        state.W.col(n) = update_w(n, state, data_, hyper_, rng);
      } catch (const Error& e) {
        rethrow_located(e, iteration, "w at voxel " + std::to_string(n));
      }
    });
  }

  // 2. AR coefficients; caches the lag Gram matrices for later stages.
  detail::parallel_for(N, threads_, [&](Index n) {
    grams_[static_cast<std::size_t>(n)] = lag_gram(residuals(data_, state.W, n), P);
    if (P == 0) return;
    Rng rng = make_stream(seed, Stage::kA, iteration, static_cast<std::uint64_t>(n));
    try {
      state.A.col(n) = draw_gaussian(a_conditional(n, state, grams_[static_cast<std::size_t>(n)], hyper_), rng);
    } catch (const Error& e) {
      rethrow_located(e, iteration, "a at voxel " + std::to_string(n));
    }
  });

  // 3. Indicators, one independent field per order.
  if (config_.clamp_order < 0) {
    const bool sw = use_swendsen_wang(static_cast<Index>(iteration), config_.sw_period);
    detail::parallel_for(P, threads_, [&](Index p) {
      Rng rng = make_stream(seed, Stage::kGamma, iteration, static_cast<std::uint64_t>(p));
      if (sw) {
        update_gamma_sw(p, state, data_, hyper_, rng);
      } else if (config_.randomized_scan) {
        std::vector<Index> order(static_cast<std::size_t>(N));
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        update_gamma_gibbs(p, state, data_, hyper_, rng, order);
      } else {
        update_gamma_gibbs(p, state, data_, hyper_, rng);
      }
    });
  }

  // 4-5. Precisions of the spatial and slab priors.
  for (Index k = 0; k < K; ++k) {
    Rng rng = make_stream(seed, Stage::kAlpha, iteration, static_cast<std::uint64_t>(k));
    try {
      state.alpha(k) = update_alpha(k, state, data_, hyper_, rng);
    } catch (const Error& e) {
      rethrow_located(e, iteration, "alpha " + std::to_string(k));
    }
  }
  for (Index p = 0; p < P; ++p) {
    Rng rng = make_stream(seed, Stage::kTau, iteration, static_cast<std::uint64_t>(p));
    try {
      state.tau(p) = update_tau(p, state, hyper_, rng);
    } catch (const Error& e) {
      rethrow_located(e, iteration, "tau " + std::to_string(p));
    }
  }

  // 6. Innovation precisions.
  const Index n_obs = data_.T() - P;
  detail::parallel_for(N, threads_, [&](Index n) {
    Rng rng = make_stream(seed, Stage::kLambda, iteration, static_cast<std::uint64_t>(n));
    try {
      state.lambda(n) =
          draw_gamma(lambda_conditional(n, state, grams_[static_cast<std::size_t>(n)], n_obs, hyper_), rng);
    } catch (const Error& e) {
      rethrow_located(e, iteration, "lambda at voxel " + std::to_string(n));
    }
  });
}

Eigen::VectorXd Sampler::voxel_log_likelihoods(const ModelState& state) const {
  const Index N = data_.N();
  const double m = static_cast<double>(data_.T() - data_.P);
  const double log_2pi = std::log(2.0 * 3.14159265358979323846);
  Eigen::VectorXd out(N);
  for (Index n = 0; n < N; ++n) {
    const double lam = state.lambda(n);
    const double ssr = innovation_ssr(grams_[static_cast<std::size_t>(n)], state.A.col(n));
    out(n) = -0.5 * lam * ssr + 0.5 * m * std::log(lam) - 0.5 * m * log_2pi;
  }
  return out;
}

namespace {

void record_draw(ChainOutput& out, const ModelState& s, const Eigen::VectorXd& loglik) {
  const Index N = out.N;
  out.w.push(s.W);
  out.a.push(s.A);
  out.lambda.push(s.lambda.transpose());
  out.alpha.push(s.alpha);
  out.tau.push(s.tau);
  for (Index n = 0; n < N; ++n) {
    for (Index p = 0; p < out.P; ++p) out.gamma_count(p, n) += s.Gamma(p, n);
    out.max_order_sum(n) += max_included_order(s.Gamma, n);
    if (out.contrast.dot(s.W.col(n)) > out.delta_e) out.exceed_count(n) += 1.0;
  }
  if (out.has_cpo) {
    for (Index n = 0; n < N; ++n) {
      const double x = -loglik(n);
      if (out.n_draws == 0) {
        out.cpo_max(n) = x;
        out.cpo_sum(n) = 1.0;
      } else if (x > out.cpo_max(n)) {
        out.cpo_sum(n) = out.cpo_sum(n) * std::exp(out.cpo_max(n) - x) + 1.0;
        out.cpo_max(n) = x;
      } else {
        out.cpo_sum(n) += std::exp(x - out.cpo_max(n));
      }
    }
  }
  out.loglik_trace.push_back(loglik.sum());
  if (out.config.store.draws) {
    const Index m = out.n_draws;
    out.w_draws.push_back(s.W);
    out.a_draws.push_back(s.A);
    out.lambda_draws.row(m) = s.lambda.transpose();
    out.loglik_draws.row(m) = loglik.transpose();
  }
  ++out.n_draws;
}

}  // namespace

ChainOutput run_chain(const Dataset& data, const Hyperparams& hyper, const SamplerConfig& config) {
  Sampler sampler(data, hyper, config);
  const Index K = data.K(), P = data.P, N = data.N();

  ChainOutput out;
  out.K = K;
  out.P = P;
  out.N = N;
  out.T = data.T();
  out.config = config;
  out.contrast = hyper.contrast;
  out.delta_e = hyper.delta_e;
  out.w.reset(K, N);
  out.a.reset(P, N);
  out.lambda.reset(1, N);
  out.alpha.reset(K, 1);
  out.tau.reset(P, 1);
  out.gamma_count = Eigen::MatrixXd::Zero(P, N);
  out.max_order_sum = Eigen::VectorXd::Zero(N);
  out.exceed_count = Eigen::VectorXd::Zero(N);
  out.has_cpo = config.store.lpml;
  if (out.has_cpo) {
    out.cpo_max = Eigen::VectorXd::Zero(N);
    out.cpo_sum = Eigen::VectorXd::Zero(N);
  }
  const Index n_draws = config.n_draws();
  out.loglik_trace.reserve(static_cast<std::size_t>(n_draws));
  if (config.store.draws) {
    out.w_draws.reserve(static_cast<std::size_t>(n_draws));
    out.a_draws.reserve(static_cast<std::size_t>(n_draws));
    out.lambda_draws.resize(n_draws, N);
    out.loglik_draws.resize(n_draws, N);
  }

  ModelState state = sampler.initial_state();
  const Index total = config.n_burnin + config.n_samples;
  for (Index it = 0; it < total; ++it) {
    sampler.sweep(state, static_cast<std::uint64_t>(it));
    const Index post = it - config.n_burnin + 1;
    if (post >= 1 && post % config.thin == 0 && out.n_draws < n_draws) {
      record_draw(out, state, sampler.voxel_log_likelihoods(state));
    }
  }
  return out;
}

ChainOutput fixed_order_baseline(const Dataset& data, const Hyperparams& hyper,
                                 SamplerConfig config, Index P0) {
  if (P0 < 0 || P0 > data.P) throw InvalidArgument("fixed order P0 must satisfy 0 <= P0 <= P");
  config.clamp_order = P0;
  return run_chain(data, hyper, config);
}

}  // namespace svaro
