#pragma once

#include "svaro/lattice.hpp"
#include "svaro/model.hpp"
#include "svaro/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace svaro {

/// Draws from N(mean * 1, (precision_scale * S'S + jitter * I)^{-1}) through
/// a sparse Cholesky factor. S'S is singular, so jitter must be positive.
Eigen::VectorXd sample_gmrf(double mean, double precision_scale, const Laplacian& lap,
                            double jitter, Rng& rng);

/// True iff every root of 1 - sum_p a_p z^p lies outside the unit circle,
/// i.e. every companion-matrix eigenvalue has modulus < 1.
bool check_stationarity(const Eigen::Ref<const Eigen::VectorXd>& a);

/// SPM-style canonical double-gamma HRF sampled every `tr` seconds over 32 s,
/// normalized to unit sum.
Eigen::VectorXd canonical_hrf(double tr);

/// T x 2 design: column 0 is a boxcar (on/off blocks of `block_length`
/// scans) convolved with the canonical HRF and scaled to unit peak; column 1
/// is the intercept. A non-empty `regressor` replaces the built-in boxcar.
Eigen::MatrixXd simulation_design(Index T, double tr, Index block_length,
                                  const Eigen::VectorXd& regressor = {});

enum class SimDesign { kSvaro, kGlmAr };

struct SimConfig {
  std::string preset = "sim1";
  SimDesign design = SimDesign::kSvaro;
  std::vector<int> dims{20, 20};
  std::vector<bool> mask;  ///< empty: full grid
  Index T = 200;
  Index P = 8;        ///< maximum AR order of the truth
  Index fit_P = -1;   ///< P assigned to the returned Dataset; -1 means P
  double tau = 20.0;  ///< slab precision (SVARO design)
  double beta0 = -0.2;
  double beta1 = 0.3;
  double lambda = 0.1;
  double w1_mean = 0.0;
  double w1_precision_scale = 10.0;
  double w2_mean = 100.0;
  double w2_precision_scale = 10.0;
  double ar_mean = 0.0;               ///< GLM-AR design only
  double ar_precision_scale = 400.0;  ///< GLM-AR design only
  double jitter_factor = 1e-4;        ///< jitter = factor * precision_scale
  double tr = 2.0;
  Index block_length = 10;
  Eigen::VectorXd regressor;
  Index ising_sweeps = 500;
  Index sw_period = 5;
  Index retry_cap = 1000;
  double active_fraction = 0.1;
  Eigen::VectorXd contrast;  ///< empty: e_1
};

/// Heterogeneous-order design: Ising-distributed indicators, P = 8, tau = 20.
SimConfig sim1_preset();
/// Homogeneous AR(1) design with a spatially smooth a_1 field (tau = 400).
SimConfig sim2_preset();

struct GroundTruth {
  Eigen::MatrixXd W;
  Eigen::MatrixXd A;
  IndicatorMatrix Gamma;
  Eigen::VectorXd lambda;
  /// Voxels whose true contrast c'w_n is in the top `active_fraction`.
  std::vector<std::uint8_t> active;
  /// Smallest true contrast value inside the active set.
  double active_threshold = 0.0;

  std::vector<int> max_order() const;
};

struct Simulation {
  Dataset dataset;
  GroundTruth truth;
};

/// Top-`fraction` active set of the contrast values (ties at the cut are
/// included). Returns the set and its threshold.
std::pair<std::vector<std::uint8_t>, double> top_fraction_active(const Eigen::VectorXd& values,
                                                                 double fraction);

Simulation simulate_svaro(const SimConfig& config, std::uint64_t seed);
Simulation simulate_glmar(const SimConfig& config, std::uint64_t seed);
/// Dispatches on config.design.
Simulation simulate(const SimConfig& config, std::uint64_t seed);

/// AR(P) noise of length T with precision lambda, warmed up for 10 P steps.
Eigen::VectorXd simulate_ar_noise(const Eigen::Ref<const Eigen::VectorXd>& a, double lambda,
                                  Index T, Rng& rng);

}  // namespace svaro
