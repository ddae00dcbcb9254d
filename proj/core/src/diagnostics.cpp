#include "svaro/diagnostics.hpp"

#include "svaro/errors.hpp"

#include <cmath>
#include <limits>

namespace svaro {

Ppm ppm(const ChainOutput& chain, const Eigen::VectorXd& contrast, double delta_e) {
  if (contrast.size() != chain.K) {
    throw InvalidArgument("contrast has length " + std::to_string(contrast.size()) +
                          ", expected K = " + std::to_string(chain.K));
  }
  Ppm out{Eigen::VectorXd(), contrast, delta_e, chain.n_draws};
  const bool counters_match = chain.contrast.size() == contrast.size() &&
                              chain.contrast == contrast && chain.delta_e == delta_e &&
                              chain.exceed_count.size() == chain.N;
  if (counters_match && chain.n_draws > 0) {
    out.values = chain.exceed_count / static_cast<double>(chain.n_draws);
    return out;
  }
  if (chain.w_draws.empty()) {
    throw InvalidArgument(
        "PPM for this contrast/threshold needs stored W draws; rerun with store.draws = true");
  }
  Eigen::MatrixXd draws(static_cast<Index>(chain.w_draws.size()), chain.N);
  for (std::size_t m = 0; m < chain.w_draws.size(); ++m) {
    draws.row(static_cast<Index>(m)) = contrast.transpose() * chain.w_draws[m];
  }
  out.values = ppm_from_contrast_draws(draws, delta_e);
  out.n_draws = draws.rows();
  return out;
}

Eigen::VectorXd ppm_from_contrast_draws(const Eigen::MatrixXd& draws, double delta_e) {
  if (draws.rows() == 0) throw InvalidArgument("no draws");
  Eigen::VectorXd out(draws.cols());
  for (Index n = 0; n < draws.cols(); ++n) {
    out(n) = static_cast<double>((draws.col(n).array() > delta_e).count()) /
             static_cast<double>(draws.rows());
  }
  return out;
}

std::vector<std::uint8_t> threshold_ppm(const Eigen::VectorXd& ppm, double delta_p) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(ppm.size()));
  for (Index n = 0; n < ppm.size(); ++n) out[n] = ppm(n) > delta_p ? 1 : 0;
  return out;
}

double lpml(const ChainOutput& chain) {
  if (chain.has_cpo && chain.n_draws > 0) {
    const double log_m = std::log(static_cast<double>(chain.n_draws));
    double total = 0.0;
    for (Index n = 0; n < chain.N; ++n) {
      total += log_m - (chain.cpo_max(n) + std::log(chain.cpo_sum(n)));
    }
    return total;
  }
  if (chain.loglik_draws.rows() > 0) return lpml_from_log_densities(chain.loglik_draws);
  throw InvalidArgument(
      "chain has no per-draw log-densities; rerun with store.lpml = true or store.draws = true");
}

double lpml_from_log_densities(const Eigen::MatrixXd& log_densities) {
  const Index M = log_densities.rows();
  if (M == 0) throw InvalidArgument("no draws");
  double total = 0.0;
  for (Index n = 0; n < log_densities.cols(); ++n) {
    const Eigen::ArrayXd neg = -log_densities.col(n).array();
    const double mx = neg.maxCoeff();
    const double lse = mx + std::log((neg - mx).exp().sum());
    total += std::log(static_cast<double>(M)) - lse;
  }
  return total;
}

Eigen::VectorXd row_mse(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw InvalidArgument("shape mismatch: estimate " + std::to_string(estimate.rows()) + "x" +
                          std::to_string(estimate.cols()) + " vs truth " +
                          std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
  }
  return (estimate - truth).array().square().rowwise().mean();
}

double MseTable::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw InvalidArgument("no MSE entry named " + name);
}

MseTable mse_table(const Eigen::MatrixXd& W_hat, const Eigen::MatrixXd& A_hat,
                   const GroundTruth& truth) {
  MseTable t;
  const Eigen::VectorXd w = row_mse(W_hat, truth.W);
  for (Index k = 0; k < w.size(); ++k) {
    t.names.push_back("w" + std::to_string(k + 1));
    t.values.push_back(w(k));
  }
  if (A_hat.cols() != truth.A.cols()) throw InvalidArgument("AR estimate has the wrong voxel count");
  Eigen::MatrixXd A_true = Eigen::MatrixXd::Zero(A_hat.rows(), A_hat.cols());
  const Index shared = std::min(A_hat.rows(), truth.A.rows());
  A_true.topRows(shared) = truth.A.topRows(shared);
  const Eigen::VectorXd a = row_mse(A_hat, A_true);
  for (Index p = 0; p < a.size(); ++p) {
    t.names.push_back("a" + std::to_string(p + 1));
    t.values.push_back(a(p));
  }
  return t;
}

MseTable mse_table(const ChainOutput& chain, const GroundTruth& truth) {
  return mse_table(chain.w.mean, chain.a.mean, truth);
}

std::vector<double> default_sensitivity_grid() { return {0.90, 0.925, 0.95, 0.975, 0.99}; }

SensitivityCurve sensitivity_curve(const Eigen::VectorXd& ppm,
                                   const std::vector<std::uint8_t>& truth_active,
                                   const std::vector<double>& grid, std::string definition) {
  if (static_cast<Index>(truth_active.size()) != ppm.size()) {
    throw InvalidArgument("truth_active length does not match the PPM");
  }
  Index n_active = 0;
  for (auto v : truth_active) n_active += v ? 1 : 0;
  if (n_active == 0) throw InvalidArgument("truth_active is empty");
  SensitivityCurve c{grid, {}, std::move(definition)};
  for (double d : grid) {
    if (!(d > 0.0 && d < 1.0)) throw InvalidArgument("sensitivity grid must lie in (0, 1)");
    Index hits = 0;
    for (Index n = 0; n < ppm.size(); ++n) hits += (truth_active[n] && ppm(n) > d) ? 1 : 0;
    c.sensitivity.push_back(static_cast<double>(hits) / static_cast<double>(n_active));
  }
  return c;
}

std::vector<int> orders_from_frequencies(const Eigen::MatrixXd& freq) {
  std::vector<int> out(static_cast<std::size_t>(freq.cols()), 0);
  for (Index n = 0; n < freq.cols(); ++n) {
    for (Index p = freq.rows() - 1; p >= 0; --p) {
      if (freq(p, n) >= 0.5) {
        out[n] = static_cast<int>(p + 1);
        break;
      }
    }
  }
  return out;
}

std::vector<Index> order_histogram(const std::vector<int>& orders, Index P) {
  std::vector<Index> h(static_cast<std::size_t>(P + 1), 0);
  for (int o : orders) {
    if (o < 0 || o > P) throw InvalidArgument("order " + std::to_string(o) + " outside 0.." + std::to_string(P));
    ++h[o];
  }
  return h;
}

OrderMap ar_order_map(const ChainOutput& chain, OrderRule rule) {
  if (chain.n_draws == 0) throw InvalidArgument("chain has no draws");
  OrderMap m;
  if (rule == OrderRule::kMedianProbability) {
    m.orders = orders_from_frequencies(chain.gamma_freq());
  } else {
    m.orders.resize(static_cast<std::size_t>(chain.N));
    for (Index n = 0; n < chain.N; ++n) {
      m.orders[n] = static_cast<int>(
          std::lround(chain.max_order_sum(n) / static_cast<double>(chain.n_draws)));
    }
  }
  m.histogram = order_histogram(m.orders, chain.P);
  return m;
}

double order_recovery_rate(const std::vector<int>& estimated, const std::vector<int>& truth,
                           int tolerance) {
  if (estimated.size() != truth.size() || truth.empty()) {
    throw InvalidArgument("order maps must be non-empty and equally long");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += std::abs(estimated[i] - truth[i]) <= tolerance ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace svaro
