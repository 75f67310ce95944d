#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "layertopic/error.hpp"
#include "layertopic/fuzzy_graph.hpp"
#include "layertopic/log.hpp"
#include "layertopic/matrix.hpp"

namespace layertopic::reducer {

struct CurveParams {
  double a = 1.0;
  double b = 1.0;
};

/// Fits 1 / (1 + a x^(2b)) to the offset-exponential membership curve on
/// [0, 3*spread] by Levenberg-Marquardt.
inline CurveParams find_ab(double spread, double min_dist) {
  constexpr int kPoints = 300;
  std::vector<double> xs(kPoints), ys(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    xs[i] = 3.0 * spread * i / (kPoints - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto residual_sum = [&](double a, double b) {
    double s = 0.0;
    for (int i = 0; i < kPoints; ++i) {
      const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
      s += r * r;
    }
    return s;
  };

  double a = 1.0, b = 1.0, lambda = 1e-3;
  double current = residual_sum(a, b);
  for (int iter = 0; iter < 500; ++iter) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (int i = 0; i < kPoints; ++i) {
      const double x = xs[i];
      const double xp = x > 0 ? std::pow(x, 2.0 * b) : 0.0;
      const double denom = 1.0 + a * xp;
      const double r = 1.0 / denom - ys[i];
      Eigen::Vector2d grad(-xp / (denom * denom),
                           x > 0 ? -a * xp * 2.0 * std::log(x) / (denom * denom) : 0.0);
      jtj += grad * grad.transpose();
      jtr += grad * r;
    }
    bool improved = false;
    for (int tries = 0; tries < 20 && !improved; ++tries) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal() *= (1.0 + lambda);
      const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
      const double na = a + step[0], nb = b + step[1];
      const double candidate = (na > 0 && nb > 0) ? residual_sum(na, nb) : current + 1.0;
      if (candidate < current) {
        const double gain = current - candidate;
        a = na;
        b = nb;
        current = candidate;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (gain < 1e-16 * (1.0 + current)) return {a, b};
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return {a, b};
}

struct LayoutParams {
  std::size_t n_components = 5;
  std::size_t n_epochs = 200;
  double min_dist = 0.0;
  double spread = 1.0;
  double learning_rate = 1.0;
  double negative_sample_rate = 5.0;
  std::uint64_t seed = 0;
};

enum class InitKind { Spectral, Random, Origin };

namespace detail {

inline std::size_t count_components(const FuzzyGraph& g) {
  std::vector<std::uint32_t> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::size_t components = g.n;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      const auto a = find(static_cast<std::uint32_t>(i)), b = find(g.targets[e]);
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
        --components;
      }
    }
  return components;
}

// Largest-magnitude entry of each column positive.
inline void canonical_signs(MatrixD& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0) v.col(c) = -v.col(c);
  }
}

inline constexpr std::size_t kDenseSpectralLimit = 2000;

// Eigenvectors 1..dim of D^-1/2 W D^-1/2 (skipping the trivial top one),
// i.e. the low end of the normalized Laplacian spectrum.
inline MatrixD spectral_coordinates(const FuzzyGraph& g, std::size_t dim, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(g.n);
  VectorD inv_sqrt_deg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) deg += g.weights[e];
    inv_sqrt_deg[i] = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  const auto k = static_cast<Eigen::Index>(dim);

  if (g.n <= kDenseSpectralLimit) {
    MatrixD m = MatrixD::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
        m(i, g.targets[e]) = g.weights[e] * inv_sqrt_deg[i] * inv_sqrt_deg[g.targets[e]];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) throw Error("spectral eigendecomposition failed");
    // Eigenvalues ascend; columns n-2 down to n-1-k are the ones we want.
    MatrixD out(n, k);
    for (Eigen::Index c = 0; c < k; ++c) out.col(c) = solver.eigenvectors().col(n - 2 - c);
    canonical_signs(out);
    return out;
  }

  // Orthogonal iteration on (M + I) / 2, whose spectrum lies in [0, 1], with
  // the known top eigenvector (proportional to sqrt(degree)) deflated.
  VectorD top(n);
  for (Eigen::Index i = 0; i < n; ++i) top[i] = inv_sqrt_deg[i] > 0 ? 1.0 / inv_sqrt_deg[i] : 0.0;
  top.normalize();
  const Eigen::Index block = k + 4;
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd q(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < block; ++c) q(i, c) = normal(rng);
  auto apply = [&](const Eigen::MatrixXd& v) {
    Eigen::MatrixXd out = v;
    for (Eigen::Index i = 0; i < n; ++i)
      for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
        out.row(i) += g.weights[e] * inv_sqrt_deg[i] * inv_sqrt_deg[g.targets[e]] *
                      v.row(g.targets[e]);
    return Eigen::MatrixXd(out * 0.5);
  };
  for (int iter = 0; iter < 300; ++iter) {
    q -= top * (top.transpose() * q);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(apply(q));
    q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
  }
  q -= top * (top.transpose() * q);
  const Eigen::MatrixXd small = q.transpose() * apply(q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small);
  const Eigen::MatrixXd ritz = q * solver.eigenvectors();
  MatrixD out(n, k);
  for (Eigen::Index c = 0; c < k; ++c) out.col(c) = ritz.col(block - 1 - c);
  canonical_signs(out);
  return out;
}

inline double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace detail

/// Initial coordinates: spectral when the graph is connected, otherwise
/// seeded Gaussian noise.
inline MatrixD initialize_layout(const FuzzyGraph& g, std::size_t dim, std::uint64_t seed,
                                 InitKind* used = nullptr) {
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto k = static_cast<Eigen::Index>(dim);
  if (g.n <= 1) {
    if (used) *used = InitKind::Origin;
    return MatrixD::Zero(n, k);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  if (g.n > dim + 1 && detail::count_components(g) == 1) {
    MatrixD coords = detail::spectral_coordinates(g, dim, seed);
    const double max_abs = coords.cwiseAbs().maxCoeff();
    if (max_abs > 0 && std::isfinite(max_abs)) {
      coords *= 10.0 / max_abs;
      for (Eigen::Index i = 0; i < coords.size(); ++i) coords.data()[i] += 1e-4 * normal(rng);
      if (used) *used = InitKind::Spectral;
      return coords;
    }
  }
  MatrixD coords(n, k);
  for (Eigen::Index i = 0; i < coords.size(); ++i) coords.data()[i] = 3.0 * normal(rng);
  if (used) *used = InitKind::Random;
  return coords;
}

/// Cross-entropy layout by SGD with negative sampling. Single-threaded and
/// fully determined by (graph, params, init).
inline MatrixD optimize_layout(const FuzzyGraph& g, const LayoutParams& params, MatrixD init) {
  const std::size_t n = g.n;
  const std::size_t dim = params.n_components;
  if (n <= 1) return MatrixD::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  if (static_cast<std::size_t>(init.rows()) != n || static_cast<std::size_t>(init.cols()) != dim)
    throw ParameterError("initial layout shape does not match the graph");

  const CurveParams ab = find_ab(params.spread, params.min_dist);
  const double a = ab.a, b = ab.b;
  const double n_epochs = static_cast<double>(params.n_epochs);

  double max_w = 0.0;
  for (double w : g.weights) max_w = std::max(max_w, w);

  struct Edge {
    std::uint32_t head, tail;
    double per_sample, next_sample, per_negative, next_negative;
  };
  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      const double w = g.weights[e];
      if (w < max_w / n_epochs) continue;  // would never be sampled
      const double per = max_w / w;
      const double per_neg = per / params.negative_sample_rate;
      edges.push_back({static_cast<std::uint32_t>(i), g.targets[e], per, per, per_neg, per_neg});
    }

  MatrixD y = std::move(init);
  std::mt19937_64 rng(params.seed);
  std::vector<double> delta(dim);
  for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
    const double alpha = params.learning_rate * (1.0 - static_cast<double>(epoch) / n_epochs);
    const auto now = static_cast<double>(epoch);
    for (auto& edge : edges) {
      if (edge.next_sample > now) continue;
      auto head = y.row(edge.head);
      auto tail = y.row(edge.tail);
      double dist2 = (head - tail).squaredNorm();
      if (dist2 > 0.0) {
        const double coef =
            -2.0 * a * b * std::pow(dist2, b - 1.0) / (a * std::pow(dist2, b) + 1.0);
        for (std::size_t d = 0; d < dim; ++d) {
          const auto di = static_cast<Eigen::Index>(d);
          const double step = detail::clip(coef * (head[di] - tail[di])) * alpha;
          head[di] += step;
          tail[di] -= step;
        }
      }
      edge.next_sample += edge.per_sample;

      const auto negatives = static_cast<std::size_t>(
          std::max(0.0, std::floor((now - edge.next_negative) / edge.per_negative)));
      for (std::size_t s = 0; s < negatives; ++s) {
        const auto other = static_cast<Eigen::Index>(rng() % n);
        if (other == static_cast<Eigen::Index>(edge.head)) continue;
        auto neg = y.row(other);
        dist2 = (head - neg).squaredNorm();
        double coef = 0.0;
        if (dist2 > 0.0) coef = 2.0 * b / ((0.001 + dist2) * (a * std::pow(dist2, b) + 1.0));
        for (std::size_t d = 0; d < dim; ++d) {
          const auto di = static_cast<Eigen::Index>(d);
          const double grad = coef > 0.0 ? detail::clip(coef * (head[di] - neg[di])) : 4.0;
          head[di] += grad * alpha;
        }
      }
      edge.next_negative += static_cast<double>(negatives) * edge.per_negative;
    }
  }
  return y;
}

inline MatrixD optimize_layout(const FuzzyGraph& g, const LayoutParams& params) {
  return optimize_layout(g, params, initialize_layout(g, params.n_components, params.seed));
}

}  // namespace layertopic::reducer
