#include "svaro/explore.hpp"

#include "parallel.hpp"
#include "svaro/errors.hpp"

#include <Eigen/QR>

#include <cmath>

namespace svaro {

OlsFit ols_fit(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Index T = X.rows();
  const Index K = X.cols();
  if (y.size() != T) throw SchemaError("response length does not match design rows");
  if (T <= K) throw InvalidArgument("OLS needs more rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < K) {
    for (Index j = 1; j <= K; ++j) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> head(X.leftCols(j));
      if (head.rank() < j) {
        throw InvalidArgument("design is rank deficient: column " + std::to_string(j - 1) +
                              " is linearly dependent on earlier columns");
      }
    }
    throw InvalidArgument("design is rank deficient");
  }
  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;
  return fit;
}

Eigen::VectorXd autocovariance(const Eigen::Ref<const Eigen::VectorXd>& x, Index max_lag) {
  const Index T = x.size();
  if (max_lag >= T) throw InvalidArgument("max_lag must be below the series length");
  const Eigen::VectorXd c = x.array() - x.mean();
  Eigen::VectorXd out(max_lag + 1);
  for (Index h = 0; h <= max_lag; ++h) {
    out(h) = c.head(T - h).dot(c.tail(T - h)) / static_cast<double>(T);
  }
  return out;
}

std::vector<ArFit> levinson_durbin(const Eigen::Ref<const Eigen::VectorXd>& acov, Index p_max) {
  if (acov.size() < p_max + 1) throw InvalidArgument("need autocovariances up to lag p_max");
  std::vector<ArFit> fits(static_cast<std::size_t>(p_max + 1));
  fits[0].coefficients = Eigen::VectorXd();
  fits[0].innovation_variance = acov(0);
  if (!(acov(0) > 0.0)) {
    for (Index p = 0; p <= p_max; ++p) {
      fits[p].order = static_cast<int>(p);
      fits[p].coefficients = Eigen::VectorXd::Zero(p);
      fits[p].innovation_variance = 0.0;
      fits[p].degenerate = true;
    }
    return fits;
  }
  Eigen::VectorXd phi;
  double v = acov(0);
  for (Index p = 1; p <= p_max; ++p) {
    double num = acov(p);
    for (Index j = 1; j < p; ++j) num -= phi(j - 1) * acov(p - j);
    const double k = num / v;
    Eigen::VectorXd next(p);
    for (Index j = 1; j < p; ++j) next(j - 1) = phi(j - 1) - k * phi(p - j - 1);
    next(p - 1) = k;
    phi = std::move(next);
    v *= (1.0 - k * k);
    fits[p].order = static_cast<int>(p);
    fits[p].coefficients = phi;
    fits[p].innovation_variance = v;
  }
  return fits;
}

ArFit fit_ar_aic(const Eigen::Ref<const Eigen::VectorXd>& series, Index p_max) {
  const Index T = series.size();
  if (p_max < 0 || T <= p_max + 1) throw InvalidArgument("fit_ar_aic needs T > p_max + 1");
  const auto fits = levinson_durbin(autocovariance(series, p_max), p_max);
  if (fits[0].degenerate) return fits[0];

  const double n = static_cast<double>(T);
  ArFit best;
  bool have = false;
  for (const ArFit& f : fits) {
    // A perfectly predictable series drives the variance to zero; stop there.
    if (!(f.innovation_variance > 0.0)) break;
    const double aic = n * std::log(f.innovation_variance) + 2.0 * f.order;
    if (!have || aic < best.aic) {
      best = f;
      best.aic = aic;
      have = true;
    }
  }
  return best;
}

std::vector<int> ar_order_map_exploratory(const Dataset& data, Index p_max, int threads) {
  std::vector<int> out(static_cast<std::size_t>(data.N()));
  detail::parallel_for(data.N(), detail::resolve_threads(threads), [&](Index n) {
    const OlsFit ols = ols_fit(data.Y.col(n), data.X_full);
    out[n] = fit_ar_aic(ols.residuals, p_max).order;
  });
  return out;
}

}  // namespace svaro
