#pragma once

#include "svaro/lattice.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace svaro {

/// Binary indicators, one row per AR order. Row-major so a single order's
/// field is contiguous.
using IndicatorMatrix =
    Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Observed data plus the voxel lattice.
///
/// `Y` is T x N (one column per voxel). `X_full` is the T x K design; the
/// model conditions on the first `P` time points, so the regression design
/// proper is the last T - P rows (`design()`).
struct Dataset {
  Eigen::MatrixXd Y;
  Eigen::MatrixXd X_full;
  LatticeGraph graph;
  std::shared_ptr<const Laplacian> laplacian;
  Index P = 0;

  Index T() const { return Y.rows(); }
  Index N() const { return Y.cols(); }
  Index K() const { return X_full.cols(); }
  auto design() const { return X_full.bottomRows(T() - P); }
};

/// Validates shapes (T > P >= 0, K >= 1, N == graph size) and builds the
/// Laplacian. Throws SchemaError on mismatch.
Dataset make_dataset(Eigen::MatrixXd Y, Eigen::MatrixXd X_full, LatticeGraph graph, Index P);

/// Fixed prior constants. Gamma priors use the shape/scale convention
/// (mean = shape * scale) everywhere.
struct Hyperparams {
  Index P = 0;
  std::vector<double> beta0;  ///< Ising sparsity, one per order
  std::vector<double> beta1;  ///< Ising smoothness, one per order
  double q1 = 1.0, q2 = 100.0;  ///< alpha_k ~ Gamma(q1, q2)
  double u1 = 1.0, u2 = 100.0;  ///< tau_p ~ Gamma(u1, u2)
  double r1 = 1.0, r2 = 100.0;  ///< lambda_n ~ Gamma(r1, r2)
  double epsilon = 1e6;         ///< spike precision multiplier
  Eigen::VectorXd contrast;
  double delta_e = 0.0;
  double delta_p = 0.95;
  /// Optional ridge added to the spatial precision, alpha_k (S^T S + ridge I).
  /// Zero gives the intrinsic prior; a positive value makes it proper.
  double spatial_ridge = 0.0;
  /// Use exp{beta1 * sum_neighbors gamma} instead of the agreement-count
  /// conditional in single-site indicator updates.
  bool on_count_neighbor_term = false;

  /// Throws InvalidArgument when a constant is out of range.
  void validate(Index K) const;
};

/// Defaults: diffuse Gamma priors, epsilon = 1e6, (beta0, beta1) =
/// (-0.2, 0.3) for every order, contrast = e_1.
Hyperparams default_hyperparams(Index P, Index K);

/// One full set of latent variables.
struct ModelState {
  Eigen::MatrixXd W;      ///< K x N regression coefficients
  Eigen::MatrixXd A;      ///< P x N AR coefficients
  IndicatorMatrix Gamma;  ///< P x N order indicators
  Eigen::VectorXd alpha;  ///< K spatial precisions
  Eigen::VectorXd tau;    ///< P slab precisions
  Eigen::VectorXd lambda; ///< N innovation precisions
};

/// Full-length residual y_{1:T,n} - X_full w_n.
Eigen::VectorXd residuals(const Dataset& data, const Eigen::MatrixXd& W, Index n);

/// (T-P) x P matrix whose (t, p) entry is the residual lagged by p+1.
Eigen::MatrixXd embed_errors(const Dataset& data, const Eigen::MatrixXd& W, Index n);

/// (P+1) x (P+1) lagged cross-product matrix G_{pq} = sum_t r_{t-p} r_{t-q}
/// over the conditioned range t = P..T-1 (0-based).
Eigen::MatrixXd lag_gram(const Eigen::Ref<const Eigen::VectorXd>& residual, Index P);

/// Sum of squared AR innovations for voxel n given a lag Gram matrix.
double innovation_ssr(const Eigen::MatrixXd& gram, const Eigen::Ref<const Eigen::VectorXd>& a);

/// Conditional Gaussian log-density of y_{P+1:T,n}, including the
/// -(T-P)/2 log(2 pi) constant.
double voxel_log_likelihood(const Dataset& data, const ModelState& state, Index n);

double log_likelihood(const Dataset& data, const ModelState& state);

/// sum_k [ N/2 log alpha_k - alpha_k/2 W_k (S^T S + ridge I) W_k^T ].
/// The pseudo-determinant and 2 pi terms are constant and omitted.
double log_prior_w(const Eigen::MatrixXd& W, const Eigen::VectorXd& alpha, const Laplacian& lap,
                   double spatial_ridge = 0.0);

/// Spike-and-slab log prior, sum over (p, n) of
/// -tau_p/2 a^2 d(gamma) + 1/2 log tau_p + 1/2 log d(gamma), d = epsilon
/// for gamma = 0 and 1 otherwise.
double log_prior_a(const Eigen::MatrixXd& A, const IndicatorMatrix& Gamma,
                   const Eigen::VectorXd& tau, double epsilon);

/// Unnormalized Ising log mass of one order's indicator field.
double log_ising(std::span<const std::uint8_t> gamma_p, double beta0, double beta1,
                 const LatticeGraph& graph);

/// Normalized Gamma(shape, scale) log density.
double gamma_log_pdf(double x, double shape, double scale);

/// log N(a; 0, 1/tau) - log N(a; 0, 1/(epsilon tau)): the indicator
/// log-likelihood ratio L(1)/L(0) for a single coefficient.
double spike_slab_log_ratio(double a, double tau, double epsilon);

/// Log-likelihood plus every log prior including the Gamma hyperpriors.
/// Constant up to the Ising partition functions and the spatial
/// pseudo-determinant.
double log_joint(const Dataset& data, const ModelState& state, const Hyperparams& hyper);

/// Largest p (1-based) with gamma_{pn} = 1, or 0.
int max_included_order(const IndicatorMatrix& Gamma, Index n);

}  // namespace svaro
