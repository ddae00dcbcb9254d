#pragma once

#include "svaro/model.hpp"

#include <Eigen/Core>

#include <vector>

namespace svaro {

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
};

/// Least squares through column-pivoted QR. Throws InvalidArgument naming
/// the first column that is linearly dependent on the ones before it.
OlsFit ols_fit(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Biased (divide-by-T) autocovariances of the mean-removed series, lags
/// 0..max_lag.
Eigen::VectorXd autocovariance(const Eigen::Ref<const Eigen::VectorXd>& x, Index max_lag);

struct ArFit {
  int order = 0;
  Eigen::VectorXd coefficients;
  double innovation_variance = 0.0;
  double aic = 0.0;
  /// Constant input series: order 0 with zero variance.
  bool degenerate = false;
};

/// Yule-Walker fits of orders 0..p_max from autocovariances acov(0..p_max).
/// Element p holds the order-p fit; aic is left at zero.
std::vector<ArFit> levinson_durbin(const Eigen::Ref<const Eigen::VectorXd>& acov, Index p_max);

/// Minimizes T log(sigma2_p) + 2p over p = 0..p_max, ties to the smaller
/// order.
ArFit fit_ar_aic(const Eigen::Ref<const Eigen::VectorXd>& series, Index p_max);

/// fit_ar_aic on the OLS residuals of every voxel (full length T).
std::vector<int> ar_order_map_exploratory(const Dataset& data, Index p_max, int threads = 0);

}  // namespace svaro
