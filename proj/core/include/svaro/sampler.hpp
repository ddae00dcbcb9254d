#pragma once

#include "svaro/ising.hpp"
#include "svaro/lattice.hpp"
#include "svaro/model.hpp"
#include "svaro/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace svaro {

// ---------------------------------------------------------------------------
// Full conditionals
//
// Every conditional below is derived from the stated priors and the
// conditional likelihood. Gamma conditionals use shape/scale:
//
//   alpha_k  | .  ~ Gamma(N/2 + q1,     1 / (w_k' Q w_k / 2 + 1/q2))
//   tau_p    | .  ~ Gamma(N/2 + u1,     1 / (sum_n d(g) a_pn^2 / 2 + 1/u2))
//   lambda_n | .  ~ Gamma((T-P)/2 + r1, 1 / (SSR_n / 2 + 1/r2))
//
// with Q = S'S + ridge * I and SSR_n the AR-whitened residual sum of squares.
// ---------------------------------------------------------------------------

/// N(mean, precision^{-1}).
struct GaussianConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

struct GammaConditional {
  double shape = 1.0;
  double scale = 1.0;
  double mean() const { return shape * scale; }
};

GaussianConditional w_conditional(Index n, const ModelState& state, const Dataset& data,
                                  const Hyperparams& hyper);

/// Same as above given the voxel's lag Gram matrix (see lag_gram).
GaussianConditional a_conditional(Index n, const ModelState& state, const Dataset& data,
                                  const Hyperparams& hyper);
GaussianConditional a_conditional(Index n, const ModelState& state, const Eigen::MatrixXd& gram,
                                  const Hyperparams& hyper);

GammaConditional alpha_conditional(Index k, const ModelState& state, const Dataset& data,
                                   const Hyperparams& hyper);
GammaConditional tau_conditional(Index p, const ModelState& state, const Hyperparams& hyper);
GammaConditional lambda_conditional(Index n, const ModelState& state, const Dataset& data,
                                    const Hyperparams& hyper);
GammaConditional lambda_conditional(Index n, const ModelState& state, const Eigen::MatrixXd& gram,
                                    Index n_obs, const Hyperparams& hyper);

/// Log-odds of gamma_{pn} = 1 given everything else (Ising neighbor term
/// plus the spike/slab likelihood ratio of a_{pn}).
double gamma_site_log_odds(Index p, Index n, const ModelState& state, const Dataset& data,
                           const Hyperparams& hyper);

/// Draws from N(mean, precision^{-1}) through a Cholesky factor of the
/// precision. Retries once with 1e-10 * trace / dim added to the diagonal;
/// throws NumericalError if that also fails.
Eigen::VectorXd draw_gaussian(const GaussianConditional& c, Rng& rng);
double draw_gamma(const GammaConditional& c, Rng& rng);

// Single updates. Each returns the new value without touching `state`
// except the indicator updates, which rewrite row p of state.Gamma.
Eigen::VectorXd update_w(Index n, const ModelState& state, const Dataset& data,
                         const Hyperparams& hyper, Rng& rng);
Eigen::VectorXd update_a(Index n, const ModelState& state, const Dataset& data,
                         const Hyperparams& hyper, Rng& rng);
void update_gamma_gibbs(Index p, ModelState& state, const Dataset& data, const Hyperparams& hyper,
                        Rng& rng, std::span<const Index> order = {});
/// Throws InvalidArgument when beta1_p < 0.
void update_gamma_sw(Index p, ModelState& state, const Dataset& data, const Hyperparams& hyper,
                     Rng& rng);
double update_alpha(Index k, const ModelState& state, const Dataset& data, const Hyperparams& hyper,
                    Rng& rng);
double update_tau(Index p, const ModelState& state, const Hyperparams& hyper, Rng& rng);
double update_lambda(Index n, const ModelState& state, const Dataset& data,
                     const Hyperparams& hyper, Rng& rng);

// ---------------------------------------------------------------------------
// Chain driver
// ---------------------------------------------------------------------------

struct StoreOptions {
  /// Keep thinned draws of W, A, lambda and per-voxel log-likelihoods.
  bool draws = false;
  /// Accumulate the per-voxel harmonic-mean terms needed for LPML.
  bool lpml = true;
};

struct SamplerConfig {
  Index n_burnin = 1000;
  /// Post-burn-in sweeps; every `thin`-th one is recorded.
  Index n_samples = 1000;
  Index thin = 1;
  std::uint64_t seed = 1;
  /// Every sw_period-th indicator update is Swendsen-Wang, the rest Gibbs;
  /// 0 disables Swendsen-Wang.
  Index sw_period = 5;
  /// 0 uses the OpenMP default. Output does not depend on this value.
  int threads = 0;
  /// Visit sites in a fresh random permutation on Gibbs indicator sweeps.
  bool randomized_scan = false;
  StoreOptions store;
  /// When >= 0, indicators are clamped to gamma_{pn} = [p <= clamp_order]
  /// and never updated (fixed-order GLM-AR baseline).
  Index clamp_order = -1;

  Index n_draws() const { return thin > 0 ? n_samples / thin : 0; }
  void validate(Index P) const;
};

/// Welford running mean / variance of a matrix-valued quantity.
struct RunningMoments {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd m2;
  Index count = 0;

  void reset(Index rows, Index cols);
  void push(const Eigen::MatrixXd& x);
  /// Unbiased sample variance (zero for fewer than two draws).
  Eigen::MatrixXd variance() const;
};

struct ChainOutput {
  Index K = 0, P = 0, N = 0, T = 0;
  Index n_draws = 0;
  SamplerConfig config;
  Eigen::VectorXd contrast;
  double delta_e = 0.0;

  RunningMoments w;       ///< K x N
  RunningMoments a;       ///< P x N
  RunningMoments lambda;  ///< 1 x N
  RunningMoments alpha;   ///< K x 1
  RunningMoments tau;     ///< P x 1

  Eigen::MatrixXd gamma_count;    ///< P x N, draws with gamma_{pn} = 1
  Eigen::VectorXd max_order_sum;  ///< per voxel, sum of max included order
  Eigen::VectorXd exceed_count;   ///< per voxel, draws with c'w_n > delta_e

  /// Online log-sum-exp of -loglik_n over draws: cpo_max + log(cpo_sum).
  bool has_cpo = false;
  Eigen::VectorXd cpo_max;
  Eigen::VectorXd cpo_sum;

  std::vector<double> loglik_trace;  ///< total log-likelihood per draw

  // Populated only with store.draws.
  std::vector<Eigen::MatrixXd> w_draws;
  std::vector<Eigen::MatrixXd> a_draws;
  Eigen::MatrixXd lambda_draws;  ///< n_draws x N
  Eigen::MatrixXd loglik_draws;  ///< n_draws x N

  Eigen::MatrixXd gamma_freq() const;
};

/// Owns the per-graph precomputation (coloring) and performs one sweep in
/// the order w, a, gamma, alpha, tau, lambda. Holds a reference to `data`,
/// which must outlive the sampler; `data.Y` may change between sweeps.
class Sampler {
 public:
  Sampler(const Dataset& data, Hyperparams hyper, SamplerConfig config);

  /// Ridge least-squares W, A = 0, Gamma = 0 (or the clamp pattern),
  /// precisions at their prior means.
  ModelState initial_state() const;

  void sweep(ModelState& state, std::uint64_t iteration);

  /// Per-voxel conditional log-likelihood of `state`, reusing the lag Gram
  /// matrices from the last sweep (W has not changed since they were built).
  Eigen::VectorXd voxel_log_likelihoods(const ModelState& state) const;

  const SweepColoring& coloring() const { return coloring_; }
  const Hyperparams& hyper() const { return hyper_; }
  const SamplerConfig& config() const { return config_; }

 private:
  const Dataset& data_;
  Hyperparams hyper_;
  SamplerConfig config_;
  SweepColoring coloring_;
  std::vector<Eigen::MatrixXd> grams_;
  int threads_ = 1;
};

/// Runs a full chain. Deterministic in (data, hyper, config) regardless of
/// the thread count.
ChainOutput run_chain(const Dataset& data, const Hyperparams& hyper, const SamplerConfig& config);

/// The GLM-AR(P0) comparator: the same sampler with indicators clamped to
/// the first P0 orders.
ChainOutput fixed_order_baseline(const Dataset& data, const Hyperparams& hyper,
                                 SamplerConfig config, Index P0);

/// Indicator matrix with gamma_{pn} = 1 for p < P0 (0-based rows).
IndicatorMatrix clamped_indicators(Index P, Index N, Index P0);

}  // namespace svaro
