#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "layertopic/error.hpp"
#include "layertopic/matrix.hpp"
#include "layertopic/parallel.hpp"

namespace layertopic::reducer {

enum class Metric { Cosine, Euclidean };

inline std::string_view to_string(Metric m) { return m == Metric::Cosine ? "cosine" : "euclidean"; }

/// Exact k nearest neighbours of every row, self excluded. Row i's
/// neighbours occupy [i*k, (i+1)*k), ordered by (distance, index).
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;

  std::uint32_t index(std::size_t i, std::size_t j) const { return indices[i * k + j]; }
  double distance(std::size_t i, std::size_t j) const { return distances[i * k + j]; }
};

namespace detail {

inline double pair_distance(const MatrixD& x, const VectorD& norms, Eigen::Index a, Eigen::Index b,
                            Metric metric) {
  if (metric == Metric::Euclidean) return (x.row(a) - x.row(b)).norm();
  if (norms[a] == 0.0 || norms[b] == 0.0) return (norms[a] == 0.0 && norms[b] == 0.0) ? 0.0 : 1.0;
  const double cos = x.row(a).dot(x.row(b)) / (norms[a] * norms[b]);
  return std::max(0.0, 1.0 - cos);
}

}  // namespace detail

/// Brute-force k-NN. Candidates are screened with blocked inner products and
/// then re-scored pairwise, so reported distances are direct evaluations.
template <typename Derived>
KnnGraph knn_graph(const Eigen::MatrixBase<Derived>& points, std::size_t k, Metric metric,
                   unsigned workers = 1) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw ParameterError("k must be >= 1");
  if (k >= n)
    throw ParameterError("k=" + std::to_string(k) + " must be smaller than the number of points (" +
                         std::to_string(n) + ")");

  const MatrixD x = points.template cast<double>();
  const VectorD norms = x.rowwise().norm();
  MatrixD screen = x;  // unit rows for cosine
  if (metric == Metric::Cosine)
    for (Eigen::Index i = 0; i < screen.rows(); ++i)
      if (norms[i] > 0) screen.row(i) /= norms[i];
  const VectorD sq = screen.rowwise().squaredNorm();

  KnnGraph out;
  out.n = n;
  out.k = k;
  out.indices.resize(n * k);
  out.distances.resize(n * k);

  const std::size_t candidates = std::min(n - 1, k + 8);
  constexpr Eigen::Index kBlock = 64;
  const auto num_blocks = static_cast<std::size_t>((static_cast<Eigen::Index>(n) + kBlock - 1) / kBlock);

  parallel_for(num_blocks, workers, [&](std::size_t first_block, std::size_t last_block) {
    std::vector<std::pair<double, std::uint32_t>> scored;
    std::vector<std::pair<double, std::uint32_t>> refined;
    for (std::size_t blk = first_block; blk < last_block; ++blk) {
      const Eigen::Index begin = static_cast<Eigen::Index>(blk) * kBlock;
      const Eigen::Index rows = std::min<Eigen::Index>(kBlock, static_cast<Eigen::Index>(n) - begin);
      const MatrixD gram = screen.middleRows(begin, rows) * screen.transpose();
      for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index i = begin + r;
        scored.clear();
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
          if (j == i) continue;
          const double approx = metric == Metric::Cosine ? 1.0 - gram(r, j)
                                                         : sq[i] + sq[j] - 2.0 * gram(r, j);
          scored.emplace_back(approx, static_cast<std::uint32_t>(j));
        }
        std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(candidates - 1),
                         scored.end());
        const double cutoff = scored[candidates - 1].first;
        // Keep everything within rounding distance of the cutoff so near-ties survive.
        const double slack = 1e-9 * (1.0 + std::abs(cutoff));
        refined.clear();
        for (const auto& [approx, j] : scored)
          if (approx <= cutoff + slack)
            refined.emplace_back(detail::pair_distance(x, norms, i, j, metric), j);
        std::partial_sort(refined.begin(), refined.begin() + static_cast<std::ptrdiff_t>(k),
                          refined.end());
        for (std::size_t c = 0; c < k; ++c) {
          out.indices[static_cast<std::size_t>(i) * k + c] = refined[c].second;
          out.distances[static_cast<std::size_t>(i) * k + c] = refined[c].first;
        }
      }
    }
  });
  return out;
}

}  // namespace layertopic::reducer
