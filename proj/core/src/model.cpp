#include "svaro/model.hpp"

#include "svaro/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace svaro {

Dataset make_dataset(Eigen::MatrixXd Y, Eigen::MatrixXd X_full, LatticeGraph graph, Index P) {
  if (P < 0) throw SchemaError("max AR order P must be >= 0");
  if (Y.rows() <= P) {
    throw SchemaError("need T > P (T=" + std::to_string(Y.rows()) + ", P=" + std::to_string(P) + ")");
  }
  if (X_full.cols() < 1) throw SchemaError("design matrix needs at least one column");
  if (X_full.rows() != Y.rows()) {
    throw SchemaError("design matrix has " + std::to_string(X_full.rows()) +
                      " rows but data has T=" + std::to_string(Y.rows()));
  }
  if (Y.cols() != graph.n_voxels()) {
    throw SchemaError("data has " + std::to_string(Y.cols()) + " voxels but mask has " +
                      std::to_string(graph.n_voxels()));
  }
  Dataset d;
  d.Y = std::move(Y);
  d.X_full = std::move(X_full);
  d.graph = std::move(graph);
  d.laplacian = std::make_shared<const Laplacian>(d.graph);
  d.P = P;
  return d;
}

void Hyperparams::validate(Index K) const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(name) + " must be positive and finite");
    }
  };
  positive(q1, "q1");
  positive(q2, "q2");
  positive(u1, "u1");
  positive(u2, "u2");
  positive(r1, "r1");
  positive(r2, "r2");
  if (!(epsilon > 1.0)) throw InvalidArgument("epsilon must be > 1");
  if (!(delta_p > 0.5 && delta_p < 1.0)) throw InvalidArgument("delta_p must lie in (0.5, 1)");
  if (P < 0) throw InvalidArgument("P must be >= 0");
  if (static_cast<Index>(beta0.size()) != P || static_cast<Index>(beta1.size()) != P) {
    throw InvalidArgument("beta0 and beta1 need one entry per AR order");
  }
  if (contrast.size() != K) {
    throw InvalidArgument("contrast has length " + std::to_string(contrast.size()) +
                          " but K=" + std::to_string(K));
  }
  if (spatial_ridge < 0.0) throw InvalidArgument("spatial_ridge must be >= 0");
}

Hyperparams default_hyperparams(Index P, Index K) {
  Hyperparams h;
  h.P = P;
  h.beta0.assign(static_cast<std::size_t>(P), -0.2);
  h.beta1.assign(static_cast<std::size_t>(P), 0.3);
  h.contrast = Eigen::VectorXd::Zero(K);
  if (K > 0) h.contrast(0) = 1.0;
  return h;
}

Eigen::VectorXd residuals(const Dataset& data, const Eigen::MatrixXd& W, Index n) {
  return data.Y.col(n) - data.X_full * W.col(n);
}

Eigen::MatrixXd embed_errors(const Dataset& data, const Eigen::MatrixXd& W, Index n) {
  const Index T = data.T();
  const Index P = data.P;
  const Eigen::VectorXd r = residuals(data, W, n);
  Eigen::MatrixXd e(T - P, P);
  for (Index p = 1; p <= P; ++p) e.col(p - 1) = r.segment(P - p, T - P);
  return e;
}

Eigen::MatrixXd lag_gram(const Eigen::Ref<const Eigen::VectorXd>& r, Index P) {
  const Index T = r.size();
  const Index m = T - P;
  Eigen::MatrixXd G(P + 1, P + 1);
  for (Index p = 0; p <= P; ++p) {
    for (Index q = p; q <= P; ++q) {
      const double v = r.segment(P - p, m).dot(r.segment(P - q, m));
      G(p, q) = v;
      G(q, p) = v;
    }
  }
  return G;
}

double innovation_ssr(const Eigen::MatrixXd& G, const Eigen::Ref<const Eigen::VectorXd>& a) {
  const Index P = a.size();
  Eigen::VectorXd astar(P + 1);
  astar(0) = -1.0;
  astar.tail(P) = a;
  return std::max(0.0, astar.dot(G * astar));
}

double voxel_log_likelihood(const Dataset& data, const ModelState& state, Index n) {
  const double lam = state.lambda(n);
  if (!(lam > 0.0)) {
    throw InvalidArgument("lambda must be positive (voxel " + std::to_string(n) + ")");
  }
  const Eigen::VectorXd r = residuals(data, state.W, n);
  const Eigen::MatrixXd G = lag_gram(r, data.P);
  const double ssr = innovation_ssr(G, state.A.col(n));
  const double m = static_cast<double>(data.T() - data.P);
  return -0.5 * lam * ssr + 0.5 * m * std::log(lam) - 0.5 * m * std::log(2.0 * std::numbers::pi);
}

double log_likelihood(const Dataset& data, const ModelState& state) {
  double total = 0.0;
  for (Index n = 0; n < data.N(); ++n) total += voxel_log_likelihood(data, state, n);
  return total;
}

double log_prior_w(const Eigen::MatrixXd& W, const Eigen::VectorXd& alpha, const Laplacian& lap,
                   double spatial_ridge) {
  const double N = static_cast<double>(W.cols());
  double total = 0.0;
  for (Index k = 0; k < W.rows(); ++k) {
    if (!(alpha(k) > 0.0)) throw InvalidArgument("alpha must be positive");
    const Eigen::VectorXd row = W.row(k).transpose();
    const double quad = lap.quadratic_form(row) + spatial_ridge * row.squaredNorm();
    total += 0.5 * N * std::log(alpha(k)) - 0.5 * alpha(k) * quad;
  }
  return total;
}

double log_prior_a(const Eigen::MatrixXd& A, const IndicatorMatrix& Gamma,
                   const Eigen::VectorXd& tau, double epsilon) {
  const double log_eps = std::log(epsilon);
  double total = 0.0;
  for (Index p = 0; p < A.rows(); ++p) {
    const double log_tau = std::log(tau(p));
    for (Index n = 0; n < A.cols(); ++n) {
      const bool slab = Gamma(p, n) != 0;
      const double d = slab ? 1.0 : epsilon;
      total += -0.5 * tau(p) * A(p, n) * A(p, n) * d + 0.5 * log_tau + (slab ? 0.0 : 0.5 * log_eps);
    }
  }
  return total;
}

double log_ising(std::span<const std::uint8_t> gamma_p, double beta0, double beta1,
                 const LatticeGraph& graph) {
  Index ones = 0;
  for (auto g : gamma_p) ones += (g != 0);
  Index agree = 0;
  for (const auto& [a, b] : graph.adjacency) {
    agree += ((gamma_p[static_cast<std::size_t>(a)] != 0) == (gamma_p[static_cast<std::size_t>(b)] != 0));
  }
  // Skip zero counts so infinite betas do not produce 0 * inf.
  double out = 0.0;
  if (ones > 0) out += beta0 * static_cast<double>(ones);
  if (agree > 0) out += beta1 * static_cast<double>(agree);
  return out;
}

double gamma_log_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) - std::lgamma(shape);
}

double spike_slab_log_ratio(double a, double tau, double epsilon) {
  return 0.5 * (epsilon - 1.0) * tau * a * a - 0.5 * std::log(epsilon);
}

double log_joint(const Dataset& data, const ModelState& state, const Hyperparams& hyper) {
  double total = log_likelihood(data, state);
  total += log_prior_w(state.W, state.alpha, *data.laplacian, hyper.spatial_ridge);
  total += log_prior_a(state.A, state.Gamma, state.tau, hyper.epsilon);
  const auto N = static_cast<std::size_t>(data.N());
  for (Index p = 0; p < data.P; ++p) {
    std::span<const std::uint8_t> row(state.Gamma.data() + p * data.N(), N);
    total += log_ising(row, hyper.beta0[static_cast<std::size_t>(p)],
                       hyper.beta1[static_cast<std::size_t>(p)], data.graph);
  }
  for (Index k = 0; k < state.alpha.size(); ++k) total += gamma_log_pdf(state.alpha(k), hyper.q1, hyper.q2);
  for (Index p = 0; p < state.tau.size(); ++p) total += gamma_log_pdf(state.tau(p), hyper.u1, hyper.u2);
  for (Index n = 0; n < state.lambda.size(); ++n) total += gamma_log_pdf(state.lambda(n), hyper.r1, hyper.r2);
  return total;
}

int max_included_order(const IndicatorMatrix& Gamma, Index n) {
  for (Index p = Gamma.rows(); p > 0; --p) {
    if (Gamma(p - 1, n) != 0) return static_cast<int>(p);
  }
  return 0;
}

}  // namespace svaro
