#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "layertopic/binary_io.hpp"
#include "layertopic/embedding.hpp"
#include "layertopic/error.hpp"
#include "layertopic/hsd.hpp"
#include "layertopic/parallel.hpp"

namespace layertopic::embedding {

struct EmbedOptions {
  unsigned workers = 1;
  /// Records held in memory at once; each batch is embedded in parallel.
  std::size_t batch_size = 256;
};

/// Embeds every record of a dump. Rows come out in ascending doc_id order and
/// are bitwise identical for any worker count.
inline EmbeddingMatrix embed_corpus(hsd::Reader& reader, const EmbeddingConfig& config,
                                    const EmbedOptions& options = {}) {
  const auto& header = reader.header();
  if (header.num_docs == 0) throw InvalidInput("dump has no documents: " + reader.path().string());
  require_layers(header.num_layer_slices, config.aggregation);

  const std::size_t n = header.num_docs;
  const std::size_t width = output_width(config.aggregation, header.hidden_dim);
  MatrixF rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  std::vector<std::uint64_t> ids(n);

  std::vector<HiddenStateDoc> batch;
  std::size_t base = 0;
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  while (base < n) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto doc = reader.next();
      if (!doc) break;
      batch.push_back(std::move(*doc));
    }
    if (batch.empty())
      throw IoError("dump ended early", base);
    parallel_for(batch.size(), options.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        rows.row(static_cast<Eigen::Index>(base + i)) = embed_document(batch[i], config).transpose();
        ids[base + i] = batch[i].doc_id;
      }
    });
    base += batch.size();
  }

  EmbeddingMatrix out;
  out.config = config;
  if (std::is_sorted(ids.begin(), ids.end())) {
    out.data = std::move(rows);
    out.doc_ids = std::move(ids);
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    out.data.resize(rows.rows(), rows.cols());
    out.doc_ids.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      out.data.row(static_cast<Eigen::Index>(r)) = rows.row(static_cast<Eigen::Index>(order[r]));
      out.doc_ids[r] = ids[order[r]];
    }
  }
  for (std::size_t r = 1; r < n; ++r)
    if (out.doc_ids[r] == out.doc_ids[r - 1])
      throw IoError("duplicate doc_id " + std::to_string(out.doc_ids[r]) + " in dump");
  return out;
}

inline EmbeddingMatrix embed_corpus(const std::filesystem::path& dump, const EmbeddingConfig& config,
                                    const EmbedOptions& options = {}) {
  hsd::Reader reader(dump);
  return embed_corpus(reader, config, options);
}

// EMB1 container: "EMB1" | u32 num_docs | u32 embed_dim | u8 aggregation | u8 pooling
// | f32 row-major little-endian. Rows are in doc_id order; ids are not stored,
// so a read matrix carries ids 0..num_docs-1.

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create embedding file: " + path.string());
  out.write("EMB1", 4);
  binary::write_le(out, static_cast<std::uint32_t>(matrix.num_docs()));
  binary::write_le(out, static_cast<std::uint32_t>(matrix.embed_dim()));
  binary::write_le(out, static_cast<std::uint8_t>(matrix.config.aggregation));
  binary::write_le(out, static_cast<std::uint8_t>(matrix.config.pooling));
  binary::write_f32_le(out, {matrix.data.data(), static_cast<std::size_t>(matrix.data.size())});
  if (!out) throw IoError("failed writing embedding file: " + path.string());
}

inline EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path.string());
  if (!binary::read_magic(in, "EMB1")) throw IoError("not an EMB1 file: " + path.string());
  std::uint32_t docs = 0, dim = 0;
  std::uint8_t aggregation = 0, pooling = 0;
  if (!binary::read_le(in, docs) || !binary::read_le(in, dim) ||
      !binary::read_le(in, aggregation) || !binary::read_le(in, pooling))
    throw IoError("truncated EMB1 header: " + path.string());
  if (aggregation > static_cast<std::uint8_t>(AggregationMode::SumAllLayers) ||
      pooling > static_cast<std::uint8_t>(PoolingStrategy::Cls))
    throw IoError("EMB1 file has an unknown config tag: " + path.string());
  EmbeddingMatrix out;
  out.config = {static_cast<AggregationMode>(aggregation), static_cast<PoolingStrategy>(pooling)};
  out.data.resize(docs, dim);
  if (!binary::read_f32_le(in, {out.data.data(), static_cast<std::size_t>(out.data.size())}))
    throw IoError("truncated EMB1 payload: " + path.string());
  out.doc_ids.resize(docs);
  std::iota(out.doc_ids.begin(), out.doc_ids.end(), std::uint64_t{0});
  return out;
}

}  // namespace layertopic::embedding
