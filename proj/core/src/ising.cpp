#include "svaro/ising.hpp"

#include "svaro/errors.hpp"
#include "svaro/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace svaro {

IsingBound ising_bounds(const IsingBoundInput& in) {
  if (!(in.r2 >= 0.0 && in.r2 < 1.0)) throw InvalidArgument("R2 must lie in [0, 1)");
  if (!(in.pi > 0.0 && in.pi < 1.0)) throw InvalidArgument("pi must lie in (0, 1)");
  if (!(in.n_voxels > 0.0)) throw InvalidArgument("N must be positive");
  if (!(in.t_len > 0.0)) throw InvalidArgument("T must be positive");
  IsingBound b;
  b.edge_length = std::cbrt(in.pi * in.n_voxels);
  b.coef = cube_neighbor_pair_count(b.edge_length) / (b.edge_length * b.edge_length * b.edge_length);
  b.rhs = -0.5 * in.t_len * in.r2 / (1.0 - in.r2);
  return b;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ExactIsing exact_ising(const LatticeGraph& graph, double beta0, double beta1) {
  const Index N = graph.n_voxels();
  if (N > 20) throw InvalidArgument("enumeration infeasible");
  const std::uint64_t n_states = std::uint64_t{1} << N;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(N));
  std::vector<double> logm(n_states);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < n_states; ++s) {
    for (Index n = 0; n < N; ++n) labels[n] = (s >> n) & 1U;
    logm[s] = log_ising(labels, beta0, beta1, graph);
    max_log = std::max(max_log, logm[s]);
  }
  ExactIsing out;
  out.marginals.assign(static_cast<std::size_t>(N), 0.0);
  double z = 0.0;
  for (std::uint64_t s = 0; s < n_states; ++s) {
    const double w = std::exp(logm[s] - max_log);
    z += w;
    for (Index n = 0; n < N; ++n) {
      if ((s >> n) & 1U) out.marginals[n] += w;
    }
  }
  for (auto& m : out.marginals) m /= z;
  out.log_partition = max_log + std::log(z);
  return out;
}

double ising_site_log_odds(const LatticeGraph& graph, std::span<const std::uint8_t> labels,
                           Index n, double beta0, double beta1, double field, NeighborRule rule) {
  int on = 0;
  int off = 0;
  for (Index j : graph.neighbors[n]) {
    if (labels[j] != 0) {
      ++on;
    } else {
      ++off;
    }
  }
  const int delta = rule == NeighborRule::kAgreement ? on - off : on;
  double out = beta0 + field;
  if (delta != 0) out += beta1 * delta;
  return out;
}

void ising_gibbs_sweep(const LatticeGraph& graph, std::span<std::uint8_t> labels, double beta0,
                       double beta1, std::span<const double> field, Rng& rng, NeighborRule rule,
                       std::span<const Index> order) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto visit = [&](Index n) {
    const double h = field.empty() ? 0.0 : field[n];
    const double p1 = logistic(ising_site_log_odds(graph, labels, n, beta0, beta1, h, rule));
    labels[n] = unif(rng) < p1 ? 1 : 0;
  };
  if (order.empty()) {
    for (Index n = 0; n < graph.n_voxels(); ++n) visit(n);
  } else {
    for (Index n : order) visit(n);
  }
}

namespace {

Index find_root(std::vector<Index>& parent, Index x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

void ising_sw_step(const LatticeGraph& graph, std::span<std::uint8_t> labels, double beta0,
                   double beta1, std::span<const double> field, Rng& rng) {
  if (beta1 < 0.0) throw InvalidArgument("Swendsen-Wang requires beta1 >= 0");
  const Index N = graph.n_voxels();
  const double bond_prob = -std::expm1(-beta1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Index> parent(static_cast<std::size_t>(N));
  std::iota(parent.begin(), parent.end(), Index{0});
  if (bond_prob > 0.0) {
    for (const auto& [a, b] : graph.adjacency) {
      if (labels[a] != labels[b]) continue;
      if (unif(rng) >= bond_prob) continue;
      const Index ra = find_root(parent, a);
      const Index rb = find_root(parent, b);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }

  // Accumulate cluster log-odds at the root; roots are the smallest member,
  // so iterating in raster order visits clusters in a fixed order.
  std::vector<double> log_odds(static_cast<std::size_t>(N), 0.0);
  std::vector<Index> root(static_cast<std::size_t>(N));
  for (Index n = 0; n < N; ++n) {
    root[n] = find_root(parent, n);
    const double h = field.empty() ? 0.0 : field[n];
    log_odds[root[n]] += beta0 + h;
  }
  std::vector<std::uint8_t> new_label(static_cast<std::size_t>(N), 0);
  for (Index n = 0; n < N; ++n) {
    if (root[n] == n) {
      new_label[n] = unif(rng) < logistic(log_odds[n]) ? 1 : 0;
    }
  }
  for (Index n = 0; n < N; ++n) {
    labels[n] = new_label[root[n]];
  }
}

IsingPriorDraws sample_ising_prior(const LatticeGraph& graph, double beta0, double beta1,
                                   const IsingSamplerConfig& config, Rng& rng) {
  const Index N = graph.n_voxels();
  IsingPriorDraws out;
  out.last.resize(static_cast<std::size_t>(N));
  std::bernoulli_distribution coin(0.5);
  for (auto& g : out.last) g = coin(rng) ? 1 : 0;
  out.marginals.assign(static_cast<std::size_t>(N), 0.0);
  std::vector<Index> counts(static_cast<std::size_t>(N), 0);

  const Index total = config.n_burnin + config.n_sweeps;
  for (Index s = 0; s < total; ++s) {
    if (use_swendsen_wang(s, config.sw_period)) {
      ising_sw_step(graph, out.last, beta0, beta1, {}, rng);
    } else {
      ising_gibbs_sweep(graph, out.last, beta0, beta1, {}, rng);
    }
    if (s >= config.n_burnin) {
      for (Index n = 0; n < N; ++n) counts[n] += out.last[n];
    }
  }
  if (config.n_sweeps > 0) {
    for (Index n = 0; n < N; ++n) {
      out.marginals[n] =
          static_cast<double>(counts[n]) / static_cast<double>(config.n_sweeps);
    }
  }
  return out;
}

}  // namespace svaro
