#include "support.hpp"

#include "svaro/diagnostics.hpp"
#include "svaro/errors.hpp"
#include "svaro/sampler.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <functional>

using namespace svaro;
using namespace svaro::testing;

namespace {

struct Fixture {
  Dataset data = small_dataset({2, 3}, 30, 2, 21);
  ModelState state = generic_state(data, 22);
  Hyperparams hyper = [] {
    Hyperparams h = default_hyperparams(2, 2);
    h.epsilon = 80.0;
    h.spatial_ridge = 0.05;
    h.q1 = 2.0;
    h.u1 = 3.0;
    h.r1 = 1.5;
    return h;
  }();
};

// Precision and mean of a Gaussian log-density f recovered by central
// differences, which are exact for a quadratic up to rounding.
GaussianConditional quadratic_oracle(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& x0) {
  const Index d = x0.size();
  const double h = 1e-2;
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd g(d);
  for (Index i = 0; i < d; ++i) {
    const Eigen::VectorXd ei = h * Eigen::VectorXd::Unit(d, i);
    g(i) = (f(x0 + ei) - f(x0 - ei)) / (2.0 * h);
    for (Index j = 0; j < d; ++j) {
      const Eigen::VectorXd ej = h * Eigen::VectorXd::Unit(d, j);
      H(i, j) = (f(x0 + ei + ej) - f(x0 + ei - ej) - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4.0 * h * h);
    }
  }
  GaussianConditional c;
  c.precision = -H;
  c.mean = x0 + c.precision.ldlt().solve(g);
  return c;
}

void check_gamma_against_joint(const std::function<double(double)>& joint, const GammaConditional& c) {
  const double xs[] = {0.2, 0.9, 2.5, 6.0};
  for (double x : xs) {
    const double lhs = joint(x) - joint(1.0);
    const double rhs = gamma_log_pdf(x, c.shape, c.scale) - gamma_log_pdf(1.0, c.shape, c.scale);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("w conditional matches the joint density's quadratic form") {
  Fixture f;
  for (Index n : {Index{0}, Index{4}}) {
    const auto joint = [&](const Eigen::VectorXd& w) {
      ModelState s = f.state;
      s.W.col(n) = w;
      return log_joint(f.data, s, f.hyper);
    };
    const GaussianConditional oracle = quadratic_oracle(joint, f.state.W.col(n));
    const GaussianConditional c = w_conditional(n, f.state, f.data, f.hyper);
    CHECK((c.precision - oracle.precision).norm() < 1e-5 * oracle.precision.norm());
    CHECK((c.mean - oracle.mean).norm() < 1e-6 * (1.0 + oracle.mean.norm()));
  }
}

TEST_CASE("a conditional matches the joint density's quadratic form") {
  Fixture f;
  for (Index n : {Index{1}, Index{5}}) {
    const auto joint = [&](const Eigen::VectorXd& a) {
      ModelState s = f.state;
      s.A.col(n) = a;
      return log_joint(f.data, s, f.hyper);
    };
    const GaussianConditional oracle = quadratic_oracle(joint, f.state.A.col(n));
    const GaussianConditional c = a_conditional(n, f.state, f.data, f.hyper);
    CHECK((c.precision - oracle.precision).norm() < 1e-5 * oracle.precision.norm());
    CHECK((c.mean - oracle.mean).norm() < 1e-6 * (1.0 + oracle.mean.norm()));
  }
}

TEST_CASE("precision conditionals match the joint density") {
  Fixture f;
  for (Index k = 0; k < 2; ++k) {
    check_gamma_against_joint(
        [&](double x) {
          ModelState s = f.state;
          s.alpha(k) = x;
          return log_joint(f.data, s, f.hyper);
        },
        alpha_conditional(k, f.state, f.data, f.hyper));
  }
  for (Index p = 0; p < 2; ++p) {
    check_gamma_against_joint(
        [&](double x) {
          ModelState s = f.state;
          s.tau(p) = x;
          return log_joint(f.data, s, f.hyper);
        },
        tau_conditional(p, f.state, f.hyper));
  }
  for (Index n : {Index{0}, Index{3}}) {
    check_gamma_against_joint(
        [&](double x) {
          ModelState s = f.state;
          s.lambda(n) = x;
          return log_joint(f.data, s, f.hyper);
        },
        lambda_conditional(n, f.state, f.data, f.hyper));
  }
}

TEST_CASE("indicator log-odds match the joint density") {
  Fixture f;
  for (Index p = 0; p < 2; ++p) {
    for (Index n = 0; n < f.data.N(); ++n) {
      ModelState on = f.state, off = f.state;
      on.Gamma(p, n) = 1;
      off.Gamma(p, n) = 0;
      const double expected = log_joint(f.data, on, f.hyper) - log_joint(f.data, off, f.hyper);
      CHECK(gamma_site_log_odds(p, n, f.state, f.data, f.hyper) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("on-count neighbor term counts included neighbors only") {
  Fixture f;
  f.hyper.on_count_neighbor_term = true;
  const Index p = 0, n = 4;  // voxel (1, 1) in a 2 x 3 grid has neighbors 1, 3, 5
  double included = 0.0;
  for (Index j : f.data.graph.neighbors[n]) included += f.state.Gamma(p, j);
  const double expected = f.hyper.beta0[p] + f.hyper.beta1[p] * included +
                          spike_slab_log_ratio(f.state.A(p, n), f.state.tau(p), f.hyper.epsilon);
  CHECK(gamma_site_log_odds(p, n, f.state, f.data, f.hyper) == doctest::Approx(expected));
}

TEST_CASE("Gaussian and Gamma draws have the requested moments") {
  GaussianConditional c;
  c.precision = Eigen::MatrixXd(2, 2);
  c.precision << 4.0, 1.0, 1.0, 2.0;
  c.mean = Eigen::Vector2d(1.0, -2.0);
  const Eigen::MatrixXd cov = c.precision.inverse();
  Rng rng(3);
  const int n = 40000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sq = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = draw_gaussian(c, rng);
    sum += x;
    sq += (x - c.mean) * (x - c.mean).transpose();
  }
  CHECK((sum / n - c.mean).cwiseAbs().maxCoeff() < 4.0 * std::sqrt(cov.diagonal().maxCoeff() / n));
  CHECK(((sq / n) - cov).cwiseAbs().maxCoeff() < 0.02);

  GammaConditional g{3.0, 0.5};
  double gs = 0.0;
  for (int i = 0; i < n; ++i) gs += draw_gamma(g, rng);
  CHECK(gs / n == doctest::Approx(g.mean()).epsilon(0.02));

  GaussianConditional bad;
  bad.precision = -Eigen::MatrixXd::Identity(2, 2);
  bad.mean = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(draw_gaussian(bad, rng), NumericalError);
}

TEST_CASE("sampler configuration validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate(3));
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(3), InvalidArgument);
  c = SamplerConfig{};
  c.clamp_order = 4;
  CHECK_THROWS_AS(c.validate(3), InvalidArgument);
  c = SamplerConfig{};
  c.n_samples = 10;
  c.thin = 3;
  CHECK(c.n_draws() == 3);
}

TEST_CASE("Swendsen-Wang indicator update rejects negative coupling") {
  Fixture f;
  f.hyper.beta1[0] = -0.1;
  Rng rng(1);
  CHECK_THROWS_AS(update_gamma_sw(0, f.state, f.data, f.hyper, rng), InvalidArgument);
}

TEST_CASE("chains are reproducible and independent of the thread count") {
  const Dataset d = small_dataset({4, 5}, 40, 3, 31);
  const Hyperparams h = default_hyperparams(3, 2);
  SamplerConfig c;
  c.n_burnin = 20;
  c.n_samples = 30;
  c.thin = 2;
  c.seed = 99;
  c.randomized_scan = true;
  c.store.draws = true;
  c.threads = 1;
  const ChainOutput one = run_chain(d, h, c);
  c.threads = 4;
  const ChainOutput four = run_chain(d, h, c);
  CHECK(one.n_draws == 15);
  CHECK(one.w.mean == four.w.mean);
  CHECK(one.a.m2 == four.a.m2);
  CHECK(one.gamma_count == four.gamma_count);
  CHECK(one.loglik_draws == four.loglik_draws);
  CHECK(one.loglik_trace == four.loglik_trace);

  c.seed = 100;
  const ChainOutput other = run_chain(d, h, c);
  CHECK(other.w.mean != one.w.mean);
}

TEST_CASE("chain summaries are consistent with stored draws") {
  const Dataset d = small_dataset({3, 3}, 40, 2, 41);
  Hyperparams h = default_hyperparams(2, 2);
  h.delta_e = 1.0;
  SamplerConfig c;
  c.n_burnin = 30;
  c.n_samples = 40;
  c.store.draws = true;
  const ChainOutput out = run_chain(d, h, c);
  REQUIRE(out.w_draws.size() == 40);

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, d.N());
  for (const auto& w : out.w_draws) mean += w;
  CHECK((mean / 40.0 - out.w.mean).norm() < 1e-10);

  Eigen::VectorXd exceed = Eigen::VectorXd::Zero(d.N());
  for (const auto& w : out.w_draws) exceed += (w.row(0).transpose().array() > 1.0).cast<double>().matrix();
  CHECK(exceed == out.exceed_count);

  CHECK(lpml(out) == doctest::Approx(lpml_from_log_densities(out.loglik_draws)).epsilon(1e-10));
  for (std::size_t m = 0; m < out.loglik_trace.size(); ++m) {
    CHECK(out.loglik_trace[m] == doctest::Approx(out.loglik_draws.row(static_cast<Index>(m)).sum()));
  }
  const Eigen::MatrixXd freq = out.gamma_freq();
  CHECK(freq.minCoeff() >= 0.0);
  CHECK(freq.maxCoeff() <= 1.0);
}

TEST_CASE("fixed-order baseline keeps its indicators clamped") {
  const Dataset d = small_dataset({3, 3}, 40, 3, 51);
  SamplerConfig c;
  c.n_burnin = 10;
  c.n_samples = 20;
  const ChainOutput out = fixed_order_baseline(d, default_hyperparams(3, 2), c, 1);
  const Eigen::MatrixXd freq = out.gamma_freq();
  CHECK((freq.row(0).array() == 1.0).all());
  CHECK((freq.bottomRows(2).array() == 0.0).all());
  CHECK(clamped_indicators(3, 2, 2).cast<int>().sum() == 4);
}

TEST_CASE("initial state") {
  const Dataset d = small_dataset({2, 2}, 30, 2, 61);
  const Hyperparams h = default_hyperparams(2, 2);
  const Sampler s(d, h, SamplerConfig{});
  const ModelState st = s.initial_state();
  CHECK(st.W.rows() == 2);
  CHECK((st.A.array() == 0.0).all());
  CHECK((st.Gamma == 0).all());
  CHECK(st.alpha(0) == doctest::Approx(h.q1 * h.q2));
  CHECK(st.lambda(0) == doctest::Approx(h.r1 * h.r2));
  // Ridge least squares lands near the generating intercept of 5.
  CHECK(st.W(1, 0) == doctest::Approx(5.0).epsilon(0.1));
}
