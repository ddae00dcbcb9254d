#pragma once

#include "svaro/model.hpp"
#include "svaro/sampler.hpp"
#include "svaro/simulate.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace svaro {

struct Ppm {
  Eigen::VectorXd values;  ///< Pr(c'w_n > delta_e | y) per voxel
  Eigen::VectorXd contrast;
  double delta_e = 0.0;
  Index n_draws = 0;
};

/// Uses the chain's exceedance counters when (c, delta_e) match the ones
/// recorded during sampling, otherwise counts over stored W draws.
Ppm ppm(const ChainOutput& chain, const Eigen::VectorXd& contrast, double delta_e);

/// PPM from an n_draws x N matrix of contrast values.
Eigen::VectorXd ppm_from_contrast_draws(const Eigen::MatrixXd& draws, double delta_e);

/// 1 where ppm > delta_p (strict).
std::vector<std::uint8_t> threshold_ppm(const Eigen::VectorXd& ppm, double delta_p);

/// Sum over voxels of log CPO, from the chain's online accumulators or its
/// stored per-draw log-likelihoods.
double lpml(const ChainOutput& chain);
/// `log_densities` is n_draws x N.
double lpml_from_log_densities(const Eigen::MatrixXd& log_densities);

/// Voxel-averaged squared error per row of two equally shaped matrices.
Eigen::VectorXd row_mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

struct MseTable {
  std::vector<std::string> names;  ///< "w1", "w2", ..., "a1", "a2", ...
  std::vector<double> values;

  double at(const std::string& name) const;
};

/// Posterior-mean MSE for every W row and every AR row of the chain. AR
/// rows beyond the truth's order are compared against zero.
MseTable mse_table(const ChainOutput& chain, const GroundTruth& truth);
MseTable mse_table(const Eigen::MatrixXd& W_hat, const Eigen::MatrixXd& A_hat,
                   const GroundTruth& truth);

struct SensitivityCurve {
  std::vector<double> grid;
  std::vector<double> sensitivity;
  std::string definition;  ///< e.g. "top10"
};

std::vector<double> default_sensitivity_grid();

/// sensitivity(d) = #(active and ppm > d) / #active. Throws when no voxel is
/// active or a grid point is outside (0, 1).
SensitivityCurve sensitivity_curve(const Eigen::VectorXd& ppm,
                                   const std::vector<std::uint8_t>& truth_active,
                                   const std::vector<double>& grid,
                                   std::string definition = "top10");

enum class OrderRule {
  /// Largest p whose inclusion frequency is at least 0.5.
  kMedianProbability,
  /// Posterior mean of the maximum included order, rounded.
  kRoundedMeanMaxOrder,
};

struct OrderMap {
  std::vector<int> orders;
  std::vector<Index> histogram;  ///< counts for orders 0..P
};

OrderMap ar_order_map(const ChainOutput& chain, OrderRule rule = OrderRule::kMedianProbability);
/// Median-probability rule applied to a P x N frequency matrix.
std::vector<int> orders_from_frequencies(const Eigen::MatrixXd& freq);
std::vector<Index> order_histogram(const std::vector<int>& orders, Index P);

/// Fraction of voxels where |estimated - true| <= tolerance.
double order_recovery_rate(const std::vector<int>& estimated, const std::vector<int>& truth,
                           int tolerance = 1);

}  // namespace svaro
