#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "layertopic/fuzzy_graph.hpp"
#include "layertopic/knn.hpp"
#include "layertopic/layout.hpp"
#include "layertopic/pca.hpp"

namespace layertopic::reducer {

enum class Mode { Umap, Pca };

inline std::string_view to_string(Mode m) { return m == Mode::Umap ? "umap" : "pca"; }

struct ReducerParams {
  std::size_t n_neighbors = 15;
  std::size_t n_components = 5;
  double min_dist = 0.0;
  Metric metric = Metric::Cosine;
  std::size_t n_epochs = 200;
  std::uint64_t seed = 0;
  Mode mode = Mode::Umap;
  /// Workers for the k-NN scan; the layout itself is always single-threaded.
  unsigned workers = 1;

  void validate(std::size_t num_points, std::size_t input_dim) const {
    if (n_components < 1 || n_components >= input_dim)
      throw ParameterError("n_components=" + std::to_string(n_components) +
                           " must be in [1, input dim " + std::to_string(input_dim) + ")");
    if (mode == Mode::Umap && num_points > 1 && (n_neighbors < 2 || n_neighbors >= num_points))
      throw ParameterError("n_neighbors=" + std::to_string(n_neighbors) + " must be in [2, " +
                           std::to_string(num_points) + ")");
    if (min_dist < 0) throw ParameterError("min_dist must be >= 0");
  }
};

inline nlohmann::json to_json(const ReducerParams& p) {
  return {{"mode", to_string(p.mode)},         {"n_neighbors", p.n_neighbors},
          {"n_components", p.n_components},    {"min_dist", p.min_dist},
          {"metric", to_string(p.metric)},     {"n_epochs", p.n_epochs},
          {"layout_threads", 1}};
}

/// Reduces rows of `points` to `params.n_components` dimensions.
template <typename Derived>
MatrixD reduce(const Eigen::MatrixBase<Derived>& points, const ReducerParams& params) {
  const auto n = static_cast<std::size_t>(points.rows());
  params.validate(n, static_cast<std::size_t>(points.cols()));
  if (params.mode == Mode::Pca) return pca(points, params.n_components).projected;
  if (n <= 1) return MatrixD::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(params.n_components));

  const KnnGraph knn = knn_graph(points, params.n_neighbors, params.metric, params.workers);
  const FuzzyGraph graph = fuzzy_graph(knn);
  LayoutParams layout;
  layout.n_components = params.n_components;
  layout.n_epochs = params.n_epochs;
  layout.min_dist = params.min_dist;
  layout.seed = params.seed;
  return optimize_layout(graph, layout);
}

}  // namespace layertopic::reducer
