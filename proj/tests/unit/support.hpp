#pragma once

#include "svaro/lattice.hpp"
#include "svaro/model.hpp"
#include "svaro/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

namespace svaro::testing {

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

/// T x 2 design: a slow sinusoid and an intercept.
inline Eigen::MatrixXd sine_design(Index T) {
  Eigen::MatrixXd X(T, 2);
  for (Index t = 0; t < T; ++t) {
    X(t, 0) = std::sin(0.3 * static_cast<double>(t));
    X(t, 1) = 1.0;
  }
  return X;
}

inline Dataset small_dataset(std::vector<int> dims, Index T, Index P, std::uint64_t seed) {
  LatticeGraph g = build_full_lattice(dims);
  const Index N = g.n_voxels();
  Eigen::MatrixXd X = sine_design(T);
  Eigen::MatrixXd W(2, N);
  for (Index n = 0; n < N; ++n) W.col(n) << 1.0 + 0.1 * static_cast<double>(n), 5.0;
  Eigen::MatrixXd Y = X * W + random_matrix(T, N, seed);
  return make_dataset(std::move(Y), std::move(X), std::move(g), P);
}

/// A state with every block away from its prior mode.
inline ModelState generic_state(const Dataset& d, std::uint64_t seed) {
  ModelState s;
  s.W = random_matrix(d.K(), d.N(), seed, 0.5);
  s.W.row(d.K() - 1).array() += 5.0;
  s.A = random_matrix(d.P, d.N(), seed + 1, 0.2);
  s.Gamma = IndicatorMatrix::Zero(d.P, d.N());
  for (Index p = 0; p < d.P; ++p) {
    for (Index n = 0; n < d.N(); ++n) s.Gamma(p, n) = static_cast<std::uint8_t>((p + n) % 2);
  }
  s.alpha = Eigen::VectorXd::LinSpaced(d.K(), 0.7, 1.3);
  s.tau = Eigen::VectorXd::LinSpaced(d.P, 4.0, 9.0);
  s.lambda = Eigen::VectorXd::LinSpaced(d.N(), 0.8, 1.2);
  return s;
}

}  // namespace svaro::testing

#include <filesystem>
#include <string>
#include <unistd.h>

namespace svaro::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("svaro_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace svaro::testing
