#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layertopic/error.hpp"
#include "layertopic/matrix.hpp"

namespace layertopic::embedding {

/// Hidden states of one document: (num_layer_slices, num_tokens, hidden_dim),
/// stored flat in (layer, token, dim) order. Slice 0 is the embedding-layer
/// output, the last slice is the final encoder output, token 0 is CLS.
struct HiddenStateDoc {
  std::uint64_t doc_id = 0;
  std::size_t num_layer_slices = 0;
  std::size_t num_tokens = 0;
  std::size_t hidden_dim = 0;
  std::vector<float> states;

  /// Index of the final encoder layer (L); slices are 0..L.
  std::size_t last_layer() const { return num_layer_slices - 1; }

  std::span<const float> token(std::size_t layer, std::size_t tok) const {
    return {states.data() + (layer * num_tokens + tok) * hidden_dim, hidden_dim};
  }

  Eigen::Map<const MatrixF> layer(std::size_t l) const {
    return {states.data() + l * num_tokens * hidden_dim, static_cast<Eigen::Index>(num_tokens),
            static_cast<Eigen::Index>(hidden_dim)};
  }

  void validate() const {
    if (num_layer_slices == 0) throw InvalidInput("hidden-state doc has no layer slices");
    if (num_tokens == 0) throw InvalidInput("hidden-state doc has no tokens");
    if (hidden_dim == 0) throw InvalidInput("hidden-state doc has zero hidden_dim");
    if (states.size() != num_layer_slices * num_tokens * hidden_dim)
      throw InvalidInput("hidden-state tensor size does not match its shape");
    for (float v : states)
      if (!std::isfinite(v)) throw InvalidInput("hidden-state tensor has non-finite values");
  }
};

enum class AggregationMode : std::uint8_t {
  LastLayer = 0,
  EmbeddingLayer = 1,
  SecondLastLayer = 2,
  SumLastFour = 3,
  ConcatLastFour = 4,
  SumAllLayers = 5,
};

enum class PoolingStrategy : std::uint8_t { Mean = 0, Max = 1, Cls = 2 };

inline constexpr std::array kAggregationModes{
    AggregationMode::EmbeddingLayer, AggregationMode::SecondLastLayer,
    AggregationMode::LastLayer,      AggregationMode::ConcatLastFour,
    AggregationMode::SumLastFour,    AggregationMode::SumAllLayers,
};

inline constexpr std::array kPoolingStrategies{PoolingStrategy::Max, PoolingStrategy::Mean,
                                               PoolingStrategy::Cls};

inline std::string_view to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::LastLayer: return "last_layer";
    case AggregationMode::EmbeddingLayer: return "embedding_layer";
    case AggregationMode::SecondLastLayer: return "second_last_layer";
    case AggregationMode::SumLastFour: return "sum_last_four";
    case AggregationMode::ConcatLastFour: return "concat_last_four";
    case AggregationMode::SumAllLayers: return "sum_all_layers";
  }
  return "?";
}

inline std::string_view display_name(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::LastLayer: return "Last Layer";
    case AggregationMode::EmbeddingLayer: return "Embedding Layer";
    case AggregationMode::SecondLastLayer: return "Second Last Layer";
    case AggregationMode::SumLastFour: return "Sum Last Four Layers";
    case AggregationMode::ConcatLastFour: return "Concat Last Four Layers";
    case AggregationMode::SumAllLayers: return "Sum All Layers";
  }
  return "?";
}

inline std::string_view to_string(PoolingStrategy pooling) {
  switch (pooling) {
    case PoolingStrategy::Mean: return "mean";
    case PoolingStrategy::Max: return "max";
    case PoolingStrategy::Cls: return "cls";
  }
  return "?";
}

inline std::string_view display_name(PoolingStrategy pooling) {
  switch (pooling) {
    case PoolingStrategy::Mean: return "Mean";
    case PoolingStrategy::Max: return "Max";
    case PoolingStrategy::Cls: return "CLS";
  }
  return "?";
}

inline std::optional<AggregationMode> parse_aggregation(std::string_view text) {
  for (auto mode : kAggregationModes)
    if (to_string(mode) == text) return mode;
  return std::nullopt;
}

inline std::optional<PoolingStrategy> parse_pooling(std::string_view text) {
  for (auto pooling : kPoolingStrategies)
    if (to_string(pooling) == text) return pooling;
  return std::nullopt;
}

struct EmbeddingConfig {
  AggregationMode aggregation = AggregationMode::LastLayer;
  PoolingStrategy pooling = PoolingStrategy::Mean;

  friend bool operator==(const EmbeddingConfig&, const EmbeddingConfig&) = default;

  /// "aggregation/pooling", e.g. "last_layer/mean".
  std::string tag() const {
    return std::string(to_string(aggregation)) + "/" + std::string(to_string(pooling));
  }

  static EmbeddingConfig parse(std::string_view tag) {
    const auto slash = tag.find('/');
    if (slash == std::string_view::npos)
      throw ConfigError("embedding config must look like 'aggregation/pooling': " +
                        std::string(tag));
    auto aggregation = parse_aggregation(tag.substr(0, slash));
    auto pooling = parse_pooling(tag.substr(slash + 1));
    if (!aggregation || !pooling) throw ConfigError("unknown embedding config: " + std::string(tag));
    return {*aggregation, *pooling};
  }
};

inline constexpr EmbeddingConfig kDefaultConfig{AggregationMode::LastLayer, PoolingStrategy::Mean};

/// All 18 configurations, aggregation-major in report order.
inline std::vector<EmbeddingConfig> all_configs() {
  std::vector<EmbeddingConfig> out;
  for (auto mode : kAggregationModes)
    for (auto pooling : kPoolingStrategies) out.push_back({mode, pooling});
  return out;
}

inline std::size_t output_width(AggregationMode mode, std::size_t hidden_dim) {
  return mode == AggregationMode::ConcatLastFour ? 4 * hidden_dim : hidden_dim;
}

inline bool touches_last_four(AggregationMode mode) {
  return mode == AggregationMode::SumLastFour || mode == AggregationMode::ConcatLastFour;
}

inline void require_layers(std::size_t num_layer_slices, AggregationMode mode) {
  std::size_t needed = 1;
  if (mode == AggregationMode::SecondLastLayer) needed = 2;
  if (touches_last_four(mode)) needed = 5;
  if (num_layer_slices < needed)
    throw ConfigError("aggregation '" + std::string(to_string(mode)) + "' needs " +
                      std::to_string(needed) + " layer slices, dump has " +
                      std::to_string(num_layer_slices));
}

namespace detail {

// Aggregates layers for tokens [first, first + count). Sums accumulate in double.
inline MatrixD aggregate_rows(const HiddenStateDoc& doc, AggregationMode mode, std::size_t first,
                              std::size_t count) {
  require_layers(doc.num_layer_slices, mode);
  const auto d = static_cast<Eigen::Index>(doc.hidden_dim);
  const auto rows = static_cast<Eigen::Index>(count);
  const std::size_t last = doc.last_layer();

  auto slice = [&](std::size_t layer) {
    return doc.layer(layer).middleRows(static_cast<Eigen::Index>(first), rows).cast<double>();
  };

  switch (mode) {
    case AggregationMode::LastLayer: return slice(last);
    case AggregationMode::EmbeddingLayer: return slice(0);
    case AggregationMode::SecondLastLayer: return slice(last - 1);
    case AggregationMode::SumLastFour: {
      MatrixD out = MatrixD::Zero(rows, d);
      for (std::size_t l = last - 3; l <= last; ++l) out += slice(l);
      return out;
    }
    case AggregationMode::ConcatLastFour: {
      MatrixD out(rows, 4 * d);
      for (std::size_t k = 0; k < 4; ++k)
        out.middleCols(static_cast<Eigen::Index>(k) * d, d) = slice(last - 3 + k);
      return out;
    }
    case AggregationMode::SumAllLayers: {
      MatrixD out = MatrixD::Zero(rows, d);
      for (std::size_t l = 0; l <= last; ++l) out += slice(l);
      return out;
    }
  }
  throw ConfigError("unknown aggregation mode");
}

}  // namespace detail

/// Per-token layer aggregation; output is (num_tokens, width).
inline MatrixD aggregate_layers(const HiddenStateDoc& doc, AggregationMode mode) {
  return detail::aggregate_rows(doc, mode, 0, doc.num_tokens);
}

/// Collapses token rows to one vector.
template <typename Derived>
VectorD pool(const Eigen::MatrixBase<Derived>& tokens, PoolingStrategy strategy) {
  if (tokens.rows() == 0) throw InvalidInput("cannot pool an empty token matrix");
  switch (strategy) {
    case PoolingStrategy::Mean:
      return tokens.template cast<double>().colwise().sum().transpose() /
             static_cast<double>(tokens.rows());
    case PoolingStrategy::Max:
      return tokens.template cast<double>().colwise().maxCoeff().transpose();
    case PoolingStrategy::Cls: return tokens.row(0).template cast<double>().transpose();
  }
  throw InvalidInput("unknown pooling strategy");
}

/// Aggregates across layers per token, then pools across tokens.
inline VectorF embed_document(const HiddenStateDoc& doc, const EmbeddingConfig& config) {
  if (doc.num_tokens == 0) throw InvalidInput("document has no tokens");
  // CLS only ever reads token 0, so skip aggregating the rest.
  const std::size_t rows = config.pooling == PoolingStrategy::Cls ? 1 : doc.num_tokens;
  return pool(detail::aggregate_rows(doc, config.aggregation, 0, rows), config.pooling)
      .cast<float>();
}

struct EmbeddingMatrix {
  MatrixF data;
  std::vector<std::uint64_t> doc_ids;
  EmbeddingConfig config;

  std::size_t num_docs() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t embed_dim() const { return static_cast<std::size_t>(data.cols()); }
};

}  // namespace layertopic::embedding
