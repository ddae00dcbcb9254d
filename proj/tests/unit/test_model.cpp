#include "support.hpp"

#include "svaro/errors.hpp"
#include "svaro/model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace svaro;
using namespace svaro::testing;

namespace {

double normal_log_pdf(double x, double mean, double precision) {
  return 0.5 * std::log(precision / (2.0 * std::numbers::pi)) - 0.5 * precision * (x - mean) * (x - mean);
}

}  // namespace

TEST_CASE("lag Gram and innovation SSR match direct loops") {
  const Index T = 25, P = 3;
  const Eigen::VectorXd r = random_matrix(T, 1, 5).col(0);
  const Eigen::MatrixXd G = lag_gram(r, P);
  REQUIRE(G.rows() == P + 1);
  for (Index p = 0; p <= P; ++p) {
    for (Index q = 0; q <= P; ++q) {
      double s = 0.0;
      for (Index t = P; t < T; ++t) s += r(t - p) * r(t - q);
      CHECK(G(p, q) == doctest::Approx(s));
    }
  }
  Eigen::VectorXd a(3);
  a << 0.4, -0.2, 0.1;
  double ssr = 0.0;
  for (Index t = P; t < T; ++t) {
    double e = r(t);
    for (Index p = 1; p <= P; ++p) e -= a(p - 1) * r(t - p);
    ssr += e * e;
  }
  CHECK(innovation_ssr(G, a) == doctest::Approx(ssr));
}

TEST_CASE("embedded lagged errors") {
  const Dataset d = small_dataset({1, 2}, 12, 2, 3);
  const ModelState s = generic_state(d, 4);
  const Eigen::VectorXd r = residuals(d, s.W, 1);
  CHECK((r - (d.Y.col(1) - d.X_full * s.W.col(1))).norm() < 1e-12);
  const Eigen::MatrixXd E = embed_errors(d, s.W, 1);
  REQUIRE(E.rows() == 10);
  REQUIRE(E.cols() == 2);
  for (Index t = 0; t < 10; ++t) {
    CHECK(E(t, 0) == doctest::Approx(r(t + 1)));
    CHECK(E(t, 1) == doctest::Approx(r(t)));
  }
}

TEST_CASE("voxel log-likelihood is a sum of Gaussian innovation densities") {
  const Dataset d = small_dataset({2, 2}, 30, 2, 11);
  const ModelState s = generic_state(d, 12);
  double total = 0.0;
  for (Index n = 0; n < d.N(); ++n) {
    const Eigen::VectorXd r = d.Y.col(n) - d.X_full * s.W.col(n);
    double ll = 0.0;
    for (Index t = d.P; t < d.T(); ++t) {
      double pred = 0.0;
      for (Index p = 1; p <= d.P; ++p) pred += s.A(p - 1, n) * r(t - p);
      ll += normal_log_pdf(r(t), pred, s.lambda(n));
    }
    CHECK(voxel_log_likelihood(d, s, n) == doctest::Approx(ll).epsilon(1e-12));
    total += ll;
  }
  CHECK(log_likelihood(d, s) == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("Ising log mass counts agreements") {
  const LatticeGraph g = build_full_lattice({2, 3});
  const std::vector<std::uint8_t> labels{1, 0, 1, 1, 1, 0};
  int on = 0, agree = 0;
  for (auto v : labels) on += v;
  for (auto [a, b] : g.adjacency) agree += labels[a] == labels[b] ? 1 : 0;
  CHECK(log_ising(labels, -0.4, 0.7, g) == doctest::Approx(-0.4 * on + 0.7 * agree));
  CHECK(log_ising(labels, 0.0, 0.0, g) == 0.0);
}

TEST_CASE("spike and slab ratio and Gamma density") {
  const double a = 0.3, tau = 7.0, eps = 500.0;
  CHECK(spike_slab_log_ratio(a, tau, eps) ==
        doctest::Approx(normal_log_pdf(a, 0.0, tau) - normal_log_pdf(a, 0.0, eps * tau)));
  CHECK(gamma_log_pdf(2.0, 3.0, 0.5) ==
        doctest::Approx(2.0 * std::log(2.0) - 4.0 - std::lgamma(3.0) - 3.0 * std::log(0.5)));
  // Integrates to one (midpoint rule).
  double mass = 0.0;
  const double h = 1e-3;
  for (double x = h / 2; x < 40.0; x += h) mass += std::exp(gamma_log_pdf(x, 2.5, 1.5)) * h;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("log joint is the sum of its parts") {
  const Dataset d = small_dataset({2, 3}, 20, 2, 8);
  const ModelState s = generic_state(d, 9);
  Hyperparams h = default_hyperparams(2, 2);
  h.spatial_ridge = 0.3;
  h.epsilon = 50.0;
  double expected = log_likelihood(d, s) + log_prior_w(s.W, s.alpha, *d.laplacian, 0.3) +
                    log_prior_a(s.A, s.Gamma, s.tau, 50.0);
  for (Index p = 0; p < 2; ++p) {
    std::vector<std::uint8_t> row(s.Gamma.row(p).data(), s.Gamma.row(p).data() + d.N());
    expected += log_ising(row, h.beta0[p], h.beta1[p], d.graph);
  }
  for (Index k = 0; k < 2; ++k) expected += gamma_log_pdf(s.alpha(k), h.q1, h.q2);
  for (Index p = 0; p < 2; ++p) expected += gamma_log_pdf(s.tau(p), h.u1, h.u2);
  for (Index n = 0; n < d.N(); ++n) expected += gamma_log_pdf(s.lambda(n), h.r1, h.r2);
  CHECK(log_joint(d, s, h) == doctest::Approx(expected).epsilon(1e-12));

  // The spatial prior: N/2 log alpha - alpha/2 w'(S'S + ridge I)w per row.
  const Eigen::MatrixXd Q = Eigen::MatrixXd(d.laplacian->StS()) + 0.3 * Eigen::MatrixXd::Identity(d.N(), d.N());
  double lw = 0.0;
  for (Index k = 0; k < 2; ++k) {
    const Eigen::VectorXd w = s.W.row(k).transpose();
    lw += 0.5 * d.N() * std::log(s.alpha(k)) - 0.5 * s.alpha(k) * w.dot(Q * w);
  }
  CHECK(log_prior_w(s.W, s.alpha, *d.laplacian, 0.3) == doctest::Approx(lw));
}

TEST_CASE("maximum included order") {
  IndicatorMatrix g = IndicatorMatrix::Zero(4, 3);
  g(0, 1) = 1;
  g(2, 1) = 1;
  g(3, 2) = 1;
  CHECK(max_included_order(g, 0) == 0);
  CHECK(max_included_order(g, 1) == 3);
  CHECK(max_included_order(g, 2) == 4);
}

TEST_CASE("dataset and hyperparameter validation") {
  LatticeGraph g = build_full_lattice({2, 2});
  CHECK_THROWS_AS(make_dataset(Eigen::MatrixXd::Zero(10, 4), Eigen::MatrixXd::Ones(9, 2), g, 1), SchemaError);
  CHECK_THROWS_AS(make_dataset(Eigen::MatrixXd::Zero(10, 3), Eigen::MatrixXd::Ones(10, 2), g, 1), SchemaError);
  CHECK_THROWS_AS(make_dataset(Eigen::MatrixXd::Zero(3, 4), Eigen::MatrixXd::Ones(3, 2), g, 3), SchemaError);

  Hyperparams h = default_hyperparams(3, 2);
  CHECK_NOTHROW(h.validate(2));
  CHECK_THROWS_AS(h.validate(3), InvalidArgument);  // contrast length
  h.epsilon = 0.5;
  CHECK_THROWS_AS(h.validate(2), InvalidArgument);
  h = default_hyperparams(3, 2);
  h.beta0.pop_back();
  CHECK_THROWS_AS(h.validate(2), InvalidArgument);
  h = default_hyperparams(3, 2);
  h.q2 = -1.0;
  CHECK_THROWS_AS(h.validate(2), InvalidArgument);
}
