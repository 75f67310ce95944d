#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <tuple>
#include <vector>

#include "layertopic/knn.hpp"
#include "layertopic/log.hpp"

namespace layertopic::reducer {

/// Symmetric weighted graph in CSR form; both (i,j) and (j,i) are stored.
struct FuzzyGraph {
  std::size_t n = 0;
  std::vector<std::size_t> offsets;  // n + 1
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;
  /// Points whose bandwidth search did not converge and was clamped.
  std::size_t unconverged = 0;

  std::size_t num_edges() const { return targets.size(); }

  double weight(std::size_t i, std::size_t j) const {
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
      if (targets[e] == j) return weights[e];
    return 0.0;
  }
};

struct Bandwidth {
  double rho = 0.0;
  double sigma = 1.0;
  bool converged = false;
};

inline constexpr int kBandwidthIterations = 64;
inline constexpr double kBandwidthTolerance = 1e-5;
inline constexpr double kMinSigmaScale = 1e-3;

/// Solves sum_j exp(-max(0, d_j - rho) / sigma) = log2(k) by bisection on sigma.
inline Bandwidth solve_bandwidth(std::span<const double> dists, double mean_all_distances) {
  Bandwidth out;
  if (dists.empty()) return out;
  out.rho = dists.front();
  const double target = std::log2(static_cast<double>(dists.size()));
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double mid = 1.0;
  for (int iter = 0; iter < kBandwidthIterations; ++iter) {
    double psum = 0.0;
    for (double d : dists) psum += std::exp(-std::max(0.0, d - out.rho) / mid);
    if (std::abs(psum - target) < kBandwidthTolerance) {
      out.converged = true;
      break;
    }
    if (psum > target) {
      hi = mid;
      mid = (lo + hi) / 2.0;
    } else {
      lo = mid;
      mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
    }
  }
  double mean = 0.0;
  for (double d : dists) mean += d;
  mean /= static_cast<double>(dists.size());
  const double floor = kMinSigmaScale * (out.rho > 0.0 ? mean : mean_all_distances);
  out.sigma = std::max(mid, floor);
  if (out.sigma <= 0.0) out.sigma = std::numeric_limits<double>::min();
  return out;
}

/// Directed membership strengths of a k-NN graph, row-major like the input.
inline std::vector<double> directed_weights(const KnnGraph& knn, std::size_t* unconverged = nullptr) {
  double mean_all = 0.0;
  for (double d : knn.distances) mean_all += d;
  if (!knn.distances.empty()) mean_all /= static_cast<double>(knn.distances.size());

  std::vector<double> w(knn.n * knn.k);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < knn.n; ++i) {
    std::span<const double> row(knn.distances.data() + i * knn.k, knn.k);
    const Bandwidth bw = solve_bandwidth(row, mean_all);
    if (!bw.converged) ++failures;
    for (std::size_t j = 0; j < knn.k; ++j)
      w[i * knn.k + j] = std::exp(-std::max(0.0, row[j] - bw.rho) / bw.sigma);
  }
  if (failures > 0)
    logger()->warn("bandwidth search did not converge for {} of {} points; sigma clamped", failures,
                   knn.n);
  if (unconverged) *unconverged = failures;
  return w;
}

/// Fuzzy union of the directed k-NN memberships: w = a + b - a*b.
inline FuzzyGraph fuzzy_graph(const KnnGraph& knn) {
  FuzzyGraph g;
  g.n = knn.n;
  const std::vector<double> directed = directed_weights(knn, &g.unconverged);

  // (low, high, weight-from-low, weight-from-high)
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double, double>> edges;
  edges.reserve(directed.size());
  for (std::size_t i = 0; i < knn.n; ++i)
    for (std::size_t j = 0; j < knn.k; ++j) {
      const auto a = static_cast<std::uint32_t>(i);
      const auto b = knn.index(i, j);
      const double w = directed[i * knn.k + j];
      if (a < b)
        edges.emplace_back(a, b, w, 0.0);
      else
        edges.emplace_back(b, a, 0.0, w);
    }
  std::sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
  });

  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> merged;
  for (std::size_t e = 0; e < edges.size();) {
    const auto [lo, hi, w1, w2] = edges[e];
    double a = w1, b = w2;
    std::size_t f = e + 1;
    while (f < edges.size() && std::get<0>(edges[f]) == lo && std::get<1>(edges[f]) == hi) {
      a = std::max(a, std::get<2>(edges[f]));
      b = std::max(b, std::get<3>(edges[f]));
      ++f;
    }
    const double w = a + b - a * b;
    if (w > 0.0) merged.emplace_back(lo, hi, w);
    e = f;
  }

  std::vector<std::size_t> degree(g.n, 0);
  for (const auto& [lo, hi, w] : merged) {
    ++degree[lo];
    ++degree[hi];
  }
  g.offsets.assign(g.n + 1, 0);
  for (std::size_t i = 0; i < g.n; ++i) g.offsets[i + 1] = g.offsets[i] + degree[i];
  g.targets.resize(g.offsets.back());
  g.weights.resize(g.offsets.back());
  std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  // Lower neighbours land first, then higher ones, so every row ends up sorted.
  for (const auto& [lo, hi, w] : merged) {
    g.targets[cursor[hi]] = lo;
    g.weights[cursor[hi]++] = w;
  }
  for (const auto& [lo, hi, w] : merged) {
    g.targets[cursor[lo]] = hi;
    g.weights[cursor[lo]++] = w;
  }
  return g;
}

}  // namespace layertopic::reducer
