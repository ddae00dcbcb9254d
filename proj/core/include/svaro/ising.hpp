#pragma once

#include "svaro/lattice.hpp"
#include "svaro/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace svaro {

// ---------------------------------------------------------------------------
// Hyperparameter bounds that keep the Ising prior away from its phase
// transition. Built from the cube argument: pi_p N included voxels arranged
// as a cube of edge V_p = (pi_p N)^{1/3} with 3 V_p^2 (V_p - 1) neighbor
// pairs. Dividing the resulting inequality by V_p^3 gives
//
//     beta0 + 3 (V_p - 1) / V_p * beta1 >= -T R^2 / (2 (1 - R^2)).
//
// High orders additionally want beta0 + 3 beta1 < 0 (sparsity).
// ---------------------------------------------------------------------------

struct IsingBoundInput {
  double n_voxels = 0.0;  ///< N
  double pi = 0.1;        ///< expected inclusion proportion, in (0, 1)
  double r2 = 0.05;       ///< per-order coefficient of determination, in [0, 1)
  double t_len = 0.0;     ///< time-series length
};

struct IsingBound {
  double edge_length = 0.0;  ///< V_p
  double coef = 0.0;         ///< multiplier on beta1, in (0, 3)
  double rhs = 0.0;          ///< lower bound on beta0 + coef * beta1

  bool satisfies_lower(double beta0, double beta1) const { return beta0 + coef * beta1 >= rhs; }
  static bool satisfies_sparsity(double beta0, double beta1) { return beta0 + 3.0 * beta1 < 0.0; }
};

/// Throws InvalidArgument for r2 >= 1 or out-of-range inputs.
IsingBound ising_bounds(const IsingBoundInput& in);

// ---------------------------------------------------------------------------
// Exact enumeration (validation oracle) and prior-only samplers.
// ---------------------------------------------------------------------------

struct ExactIsing {
  std::vector<double> marginals;  ///< P(gamma_n = 1)
  double log_partition = 0.0;
};

/// Full 2^N enumeration; throws InvalidArgument("enumeration infeasible")
/// for N > 20.
ExactIsing exact_ising(const LatticeGraph& graph, double beta0, double beta1);

enum class NeighborRule {
  kAgreement,  ///< exact conditional of the agreement-count prior
  kOnCount,   ///< beta1 * (number of neighbors equal to 1)
};

/// Conditional log-odds of gamma_n = 1 given the rest of the field, plus an
/// external field term (the likelihood log-ratio; 0 for the prior).
double ising_site_log_odds(const LatticeGraph& graph, std::span<const std::uint8_t> labels,
                           Index n, double beta0, double beta1, double field,
                           NeighborRule rule = NeighborRule::kAgreement);

/// One single-site Gibbs sweep in raster order. `field` may be empty
/// (no external field) or hold one entry per voxel. A non-empty `order`
/// overrides the raster order.
void ising_gibbs_sweep(const LatticeGraph& graph, std::span<std::uint8_t> labels, double beta0,
                       double beta1, std::span<const double> field, Rng& rng,
                       NeighborRule rule = NeighborRule::kAgreement,
                       std::span<const Index> order = {});

/// One Swendsen-Wang step: bond equal-label neighbors with probability
/// 1 - exp(-beta1), then relabel each cluster C jointly with log-odds
/// sum_{n in C} (beta0 + field_n). Throws InvalidArgument for beta1 < 0.
void ising_sw_step(const LatticeGraph& graph, std::span<std::uint8_t> labels, double beta0,
                   double beta1, std::span<const double> field, Rng& rng);

struct IsingSamplerConfig {
  Index n_burnin = 1000;
  Index n_sweeps = 10000;
  /// 0: Gibbs only. k >= 1: every k-th sweep is Swendsen-Wang (1 = SW only).
  Index sw_period = 5;
};

struct IsingPriorDraws {
  std::vector<std::uint8_t> last;
  std::vector<double> marginals;  ///< post-burn-in frequency of gamma_n = 1
};

/// Samples the prior with no likelihood term, starting from a fair-coin field.
IsingPriorDraws sample_ising_prior(const LatticeGraph& graph, double beta0, double beta1,
                                   const IsingSamplerConfig& config, Rng& rng);

/// True when sweep `s` (0-based) should use Swendsen-Wang.
inline bool use_swendsen_wang(Index sweep, Index sw_period) {
  return sw_period > 0 && (sweep % sw_period) == sw_period - 1;
}

/// Numerically safe logistic function.
double logistic(double x);

}  // namespace svaro
