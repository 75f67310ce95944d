#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/error.hpp"
#include "layertopic/log.hpp"
#include "layertopic/matrix.hpp"
#include "layertopic/parallel.hpp"

namespace layertopic::cluster {

struct ClusterParams {
  std::size_t min_cluster_size = 10;
  /// Defaults to min_cluster_size.
  std::optional<std::size_t> min_samples;

  std::size_t effective_min_samples() const { return min_samples.value_or(min_cluster_size); }

  void validate() const {
    if (min_cluster_size < 2) throw ParameterError("min_cluster_size must be >= 2");
    if (effective_min_samples() < 1) throw ParameterError("min_samples must be >= 1");
  }
};

inline nlohmann::json to_json(const ClusterParams& p) {
  return {{"min_cluster_size", p.min_cluster_size},
          {"min_samples", p.effective_min_samples()},
          {"metric", "euclidean"},
          {"selection", "eom"}};
}

/// Cluster labels: -1 is noise, clusters are 0..K-1 by decreasing size.
struct Labeling {
  std::vector<int> labels;
  std::vector<double> probabilities;

  std::size_t num_clusters() const {
    int top = -1;
    for (int l : labels) top = std::max(top, l);
    return static_cast<std::size_t>(top + 1);
  }
  std::size_t noise_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
  }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(num_clusters(), 0);
    for (int l : labels)
      if (l >= 0) ++out[static_cast<std::size_t>(l)];
    return out;
  }
};

/// Renumbers cluster ids by decreasing size (ties: smallest member index first).
/// Probabilities are carried along untouched.
inline void canonicalize(Labeling& labeling) {
  std::map<int, std::pair<std::size_t, std::size_t>> stats;  // id -> (size, first member)
  for (std::size_t i = 0; i < labeling.labels.size(); ++i) {
    const int l = labeling.labels[i];
    if (l < 0) continue;
    auto [it, inserted] = stats.try_emplace(l, 0, i);
    ++it->second.first;
  }
  std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> order(stats.begin(), stats.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::map<int, int> remap;
  for (std::size_t r = 0; r < order.size(); ++r) remap[order[r].first] = static_cast<int>(r);
  for (int& l : labeling.labels)
    if (l >= 0) l = remap[l];
}

inline double euclidean(const MatrixD& y, Eigen::Index a, Eigen::Index b) {
  return (y.row(a) - y.row(b)).norm();
}

/// Distance to the min_samples-th nearest other point.
inline std::vector<double> core_distances(const MatrixD& y, std::size_t min_samples,
                                          unsigned workers = 1) {
  const auto n = static_cast<std::size_t>(y.rows());
  if (min_samples < 1 || min_samples >= n)
    throw ParameterError("min_samples=" + std::to_string(min_samples) + " must be in [1, " +
                         std::to_string(n) + ")");
  std::vector<double> core(n);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> dists(n - 1);
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i)
          dists[c++] = euclidean(y, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(min_samples - 1),
                       dists.end());
      core[i] = dists[min_samples - 1];
    }
  });
  return core;
}

/// d_mr(a, b) = max(core(a), core(b), d(a, b)).
class MutualReachability {
 public:
  MutualReachability(const MatrixD& y, std::vector<double> core) : y_(&y), core_(std::move(core)) {}

  double operator()(std::size_t a, std::size_t b) const {
    const double d = a == b ? 0.0
                            : euclidean(*y_, static_cast<Eigen::Index>(a),
                                        static_cast<Eigen::Index>(b));
    return std::max({core_[a], core_[b], d});
  }
  std::size_t size() const { return core_.size(); }
  const std::vector<double>& core() const { return core_; }

 private:
  const MatrixD* y_;
  std::vector<double> core_;
};

struct Edge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;
};

/// Dense Prim MST over any symmetric distance accessor, edges sorted by
/// (weight, lower endpoint, higher endpoint).
template <typename Distance>
std::vector<Edge> minimum_spanning_tree(const Distance& dist, std::size_t n) {
  std::vector<Edge> edges;
  if (n < 2) return edges;
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> from(n, 0);
  std::vector<char> in_tree(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = dist(current, v);
      if (d < key[v]) {
        key[v] = d;
        from[v] = static_cast<std::uint32_t>(current);
      }
      if (best == n || key[v] < key[best]) best = v;
    }
    in_tree[best] = 1;
    const auto a = std::min<std::uint32_t>(from[best], static_cast<std::uint32_t>(best));
    const auto b = std::max<std::uint32_t>(from[best], static_cast<std::uint32_t>(best));
    edges.push_back({a, b, key[best]});
    current = best;
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  return edges;
}

/// Single-linkage dendrogram. Node ids < n are points; merge i creates node n + i.
struct Dendrogram {
  struct Merge {
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double distance = 0.0;
    std::size_t size = 0;
  };
  std::size_t n = 0;
  std::vector<Merge> merges;

  std::size_t size_of(std::uint32_t node) const { return node < n ? 1 : merges[node - n].size; }
};

inline Dendrogram dendrogram_from_mst(std::span<const Edge> sorted_edges, std::size_t n) {
  Dendrogram tree;
  tree.n = n;
  std::vector<std::uint32_t> parent(2 * n, 0);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const Edge& e : sorted_edges) {
    const auto ra = find(e.a), rb = find(e.b);
    const auto node = static_cast<std::uint32_t>(n + tree.merges.size());
    tree.merges.push_back({std::min(ra, rb), std::max(ra, rb), e.weight,
                           tree.size_of(ra) + tree.size_of(rb)});
    parent[ra] = parent[rb] = node;
  }
  return tree;
}

template <typename Distance>
Dendrogram build_hierarchy(const Distance& dist, std::size_t n) {
  const auto mst = minimum_spanning_tree(dist, n);
  return dendrogram_from_mst(mst, n);
}

inline Dendrogram build_hierarchy(const MutualReachability& mr) {
  return build_hierarchy(mr, mr.size());
}

/// Condensed cluster tree. Cluster 0 is the root; children always have larger ids.
struct CondensedTree {
  struct Row {
    std::size_t parent = 0;  // cluster id
    std::size_t child = 0;   // cluster id or point index
    bool child_is_cluster = false;
    double lambda = 0.0;
    std::size_t child_size = 0;
  };
  std::size_t num_points = 0;
  std::size_t num_clusters = 0;
  std::vector<Row> rows;
};

/// Caps 1/0 so stabilities stay finite on duplicate points.
inline constexpr double kMaxLambda = 1e300;

inline double lambda_of(double distance) {
  return distance > 0.0 ? std::min(kMaxLambda, 1.0 / distance) : kMaxLambda;
}

inline CondensedTree condense(const Dendrogram& tree, std::size_t min_cluster_size) {
  CondensedTree out;
  out.num_points = tree.n;
  if (tree.n == 0) return out;
  out.num_clusters = 1;
  if (tree.merges.empty()) {
    out.rows.push_back({0, 0, false, kMaxLambda, 1});
    return out;
  }

  const auto total = static_cast<std::uint32_t>(tree.n + tree.merges.size());
  std::vector<std::size_t> relabel(total, 0);
  std::vector<char> ignore(total, 0);

  auto leaves_of = [&](std::uint32_t node, auto&& emit) {
    std::vector<std::uint32_t> stack{node};
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      ignore[v] = 1;
      if (v < tree.n) {
        emit(v);
      } else {
        const auto& m = tree.merges[v - tree.n];
        stack.push_back(m.right);
        stack.push_back(m.left);
      }
    }
  };

  const std::uint32_t root = total - 1;
  std::deque<std::uint32_t> queue{root};
  while (!queue.empty()) {
    const auto node = queue.front();
    queue.pop_front();
    if (node < tree.n || ignore[node]) continue;
    const auto& m = tree.merges[node - tree.n];
    const double lambda = lambda_of(m.distance);
    const std::size_t left_size = tree.size_of(m.left);
    const std::size_t right_size = tree.size_of(m.right);
    const std::size_t here = relabel[node];

    auto fall_out = [&](std::uint32_t child) {
      leaves_of(child, [&](std::uint32_t p) { out.rows.push_back({here, p, false, lambda, 1}); });
    };

    if (left_size >= min_cluster_size && right_size >= min_cluster_size) {
      for (auto [child, size] : {std::pair{m.left, left_size}, std::pair{m.right, right_size}}) {
        relabel[child] = out.num_clusters++;
        out.rows.push_back({here, relabel[child], true, lambda, size});
        queue.push_back(child);
      }
    } else if (left_size < min_cluster_size && right_size < min_cluster_size) {
      fall_out(m.left);
      fall_out(m.right);
    } else if (left_size < min_cluster_size) {
      relabel[m.right] = here;
      fall_out(m.left);
      queue.push_back(m.right);
    } else {
      relabel[m.left] = here;
      fall_out(m.right);
      queue.push_back(m.left);
    }
  }
  return out;
}

/// Stability of every cluster: sum over rows of (lambda - lambda_birth) * size.
inline std::vector<double> stabilities(const CondensedTree& tree) {
  std::vector<double> birth(tree.num_clusters, 0.0);
  for (const auto& row : tree.rows)
    if (row.child_is_cluster) birth[row.child] = row.lambda;
  std::vector<double> stability(tree.num_clusters, 0.0);
  for (const auto& row : tree.rows)
    stability[row.parent] += (row.lambda - birth[row.parent]) * static_cast<double>(row.child_size);
  return stability;
}

/// Excess-of-Mass selection (root never selected) and point labelling.
inline Labeling extract_clusters(const CondensedTree& tree) {
  Labeling out;
  out.labels.assign(tree.num_points, -1);
  out.probabilities.assign(tree.num_points, 0.0);
  if (tree.num_points == 0) return out;

  const std::size_t c = tree.num_clusters;
  std::vector<std::vector<std::size_t>> children(c);
  std::vector<std::size_t> parent(c, 0);
  std::vector<std::size_t> point_parent(tree.num_points, 0);
  std::vector<double> point_lambda(tree.num_points, 0.0);
  for (const auto& row : tree.rows) {
    if (row.child_is_cluster) {
      children[row.parent].push_back(row.child);
      parent[row.child] = row.parent;
    } else {
      point_parent[row.child] = row.parent;
      point_lambda[row.child] = row.lambda;
    }
  }

  std::vector<double> stability = stabilities(tree);
  std::vector<char> selected(c, 0);
  for (std::size_t id = c; id-- > 1;) selected[id] = 1;
  for (std::size_t id = c; id-- > 1;) {
    double subtree = 0.0;
    for (auto ch : children[id]) subtree += stability[ch];
    if (subtree > stability[id]) {
      selected[id] = 0;
      stability[id] = subtree;
    } else {
      std::vector<std::size_t> stack(children[id].begin(), children[id].end());
      while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        selected[v] = 0;
        stack.insert(stack.end(), children[v].begin(), children[v].end());
      }
    }
  }

  // Nearest selected ancestor (inclusive) of every cluster; parents precede children.
  std::vector<long> owner(c, -1);
  for (std::size_t id = 1; id < c; ++id)
    owner[id] = selected[id] ? static_cast<long>(id) : owner[parent[id]];

  std::vector<double> max_lambda(c, 0.0);
  for (std::size_t p = 0; p < tree.num_points; ++p) {
    const long o = owner[point_parent[p]];
    if (o < 0) continue;
    out.labels[p] = static_cast<int>(o);
    max_lambda[static_cast<std::size_t>(o)] =
        std::max(max_lambda[static_cast<std::size_t>(o)], point_lambda[p]);
  }
  for (std::size_t p = 0; p < tree.num_points; ++p) {
    if (out.labels[p] < 0) continue;
    const double top = max_lambda[static_cast<std::size_t>(out.labels[p])];
    out.probabilities[p] = top > 0 ? std::min(point_lambda[p], top) / top : 1.0;
  }
  canonicalize(out);
  return out;
}

inline Labeling condense_and_extract(const Dendrogram& tree, std::size_t min_cluster_size) {
  return extract_clusters(condense(tree, min_cluster_size));
}

/// Full density clustering of reduced points.
inline Labeling hdbscan(const MatrixD& y, const ClusterParams& params, unsigned workers = 1) {
  params.validate();
  const auto n = static_cast<std::size_t>(y.rows());
  if (n < params.min_cluster_size || n < 2) {
    Labeling all_noise;
    all_noise.labels.assign(n, -1);
    all_noise.probabilities.assign(n, 0.0);
    return all_noise;
  }
  std::size_t min_samples = params.effective_min_samples();
  if (min_samples >= n) {
    logger()->warn("min_samples={} clamped to {} for {} points", min_samples, n - 1, n);
    min_samples = n - 1;
  }
  const MutualReachability mr(y, core_distances(y, min_samples, workers));
  return condense_and_extract(build_hierarchy(mr), params.min_cluster_size);
}

/// Adjusted Rand index between two labelings (noise counts as its own class).
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidInput("labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto choose2 = [](double x) { return x * (x - 1) / 2.0; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [k, v] : table) index += choose2(v);
  for (const auto& [k, v] : rows) sum_rows += choose2(v);
  for (const auto& [k, v] : cols) sum_cols += choose2(v);
  const double expected = sum_rows * sum_cols / choose2(static_cast<double>(n));
  const double max_index = (sum_rows + sum_cols) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace layertopic::cluster
