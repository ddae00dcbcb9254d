#include "svaro/errors.hpp"
#include "svaro/ising.hpp"

#include <doctest.h>

#include <cmath>

using namespace svaro;

TEST_CASE("exact enumeration on two sites matches the hand-computed partition") {
  const LatticeGraph g = build_full_lattice({1, 2});
  const double b0 = -0.3, b1 = 0.8;
  // States 00, 01, 10, 11 have log mass b1, b0, b0, 2 b0 + b1.
  const double z = std::exp(b1) + 2.0 * std::exp(b0) + std::exp(2.0 * b0 + b1);
  const ExactIsing e = exact_ising(g, b0, b1);
  CHECK(e.log_partition == doctest::Approx(std::log(z)));
  CHECK(e.marginals[0] == doctest::Approx((std::exp(b0) + std::exp(2.0 * b0 + b1)) / z));
  CHECK(e.marginals[1] == doctest::Approx(e.marginals[0]));
}

TEST_CASE("exact enumeration special cases") {
  const LatticeGraph g = build_full_lattice({3, 3});
  for (double m : exact_ising(g, 0.0, 0.0).marginals) CHECK(m == doctest::Approx(0.5));
  for (double m : exact_ising(g, 0.0, 0.9).marginals) CHECK(m == doctest::Approx(0.5));
  for (double m : exact_ising(g, 8.0, 0.0).marginals) CHECK(m > 0.999);
  CHECK(exact_ising(g, 0.0, 0.0).log_partition == doctest::Approx(9.0 * std::log(2.0)));
  CHECK_THROWS_AS(exact_ising(build_full_lattice({3, 7}), 0.0, 0.1), InvalidArgument);
}

TEST_CASE("site log-odds for both neighbor rules") {
  const LatticeGraph g = build_full_lattice({3, 3});
  std::vector<std::uint8_t> labels(9, 0);
  labels[1] = labels[3] = labels[5] = 1;  // three of the centre's four neighbors
  CHECK(ising_site_log_odds(g, labels, 4, -0.5, 0.4, 0.0) == doctest::Approx(-0.5 + 0.4 * (3 - 1)));
  CHECK(ising_site_log_odds(g, labels, 4, -0.5, 0.4, 0.2, NeighborRule::kOnCount) ==
        doctest::Approx(-0.5 + 0.4 * 3 + 0.2));
}

TEST_CASE("prior samplers agree with enumeration on a small lattice") {
  const LatticeGraph g = build_full_lattice({2, 3});
  const ExactIsing exact = exact_ising(g, -0.2, 0.5);
  for (Index period : {Index{0}, Index{1}, Index{3}}) {
    Rng rng = make_stream(5, Stage::kIsingPrior, static_cast<std::uint64_t>(period));
    const auto draws = sample_ising_prior(g, -0.2, 0.5, {500, 40000, period}, rng);
    for (Index n = 0; n < g.n_voxels(); ++n) {
      CHECK(std::abs(draws.marginals[n] - exact.marginals[n]) < 0.02);
    }
  }
}

TEST_CASE("Swendsen-Wang rejects antiferromagnetic coupling") {
  const LatticeGraph g = build_full_lattice({2, 2});
  std::vector<std::uint8_t> labels(4, 0);
  Rng rng(1);
  CHECK_THROWS_AS(ising_sw_step(g, labels, 0.0, -0.1, {}, rng), InvalidArgument);
}

TEST_CASE("Swendsen-Wang with zero coupling is independent site flipping") {
  // No bonds form, so each site is drawn from logistic(beta0 + field_n).
  const LatticeGraph g = build_full_lattice({1, 3});
  std::vector<double> field{-1.0, 0.0, 2.0};
  std::vector<std::uint8_t> labels(3, 0);
  std::vector<double> freq(3, 0.0);
  Rng rng(77);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    ising_sw_step(g, labels, 0.5, 0.0, field, rng);
    for (int j = 0; j < 3; ++j) freq[j] += labels[j];
  }
  for (int j = 0; j < 3; ++j) CHECK(freq[j] / n == doctest::Approx(logistic(0.5 + field[j])).epsilon(0.02));
}

TEST_CASE("schedule and logistic helpers") {
  CHECK_FALSE(use_swendsen_wang(0, 0));
  CHECK(use_swendsen_wang(0, 1));
  CHECK_FALSE(use_swendsen_wang(3, 5));
  CHECK(use_swendsen_wang(4, 5));
  CHECK(use_swendsen_wang(9, 5));
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(800.0) == 1.0);
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(logistic(-800.0) < 1e-300);
}

TEST_CASE("phase-transition bounds") {
  const IsingBound b = ising_bounds({56526.0, 0.1, 0.05, 352.0});
  CHECK(b.edge_length == doctest::Approx(std::cbrt(5652.6)));
  CHECK(b.coef == doctest::Approx(2.83).epsilon(0.005));
  CHECK(b.rhs == doctest::Approx(-9.26).epsilon(0.002));
  CHECK(b.satisfies_lower(-0.2, 0.3));
  CHECK_FALSE(b.satisfies_lower(-20.0, 0.3));
  CHECK(IsingBound::satisfies_sparsity(-0.2, 0.0));
  CHECK_FALSE(IsingBound::satisfies_sparsity(-0.2, 0.3));

  // R^2 = 0 gives a zero right-hand side.
  CHECK(ising_bounds({1000.0, 0.1, 0.0, 100.0}).rhs == 0.0);
  CHECK_THROWS_AS(ising_bounds({1000.0, 0.1, 1.0, 100.0}), InvalidArgument);
  CHECK_THROWS_AS(ising_bounds({1000.0, 0.0, 0.05, 100.0}), InvalidArgument);
  CHECK_THROWS_AS(ising_bounds({0.0, 0.1, 0.05, 100.0}), InvalidArgument);
}
