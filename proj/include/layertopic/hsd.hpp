#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

#include "layertopic/binary_io.hpp"
#include "layertopic/embedding.hpp"
#include "layertopic/error.hpp"

// HSD1 hidden-state dump container.
//
//   "HSD1" | u32 version=1 | u32 num_docs | u16 num_layer_slices | u16 hidden_dim
//   per doc: u64 doc_id | u16 num_tokens | f32[num_layer_slices][num_tokens][hidden_dim]
//
// All integers and floats little-endian.
namespace layertopic::hsd {

inline constexpr std::uint32_t kVersion = 1;

struct Header {
  std::uint32_t version = kVersion;
  std::uint32_t num_docs = 0;
  std::uint16_t num_layer_slices = 0;
  std::uint16_t hidden_dim = 0;
};

/// Sequential reader. Records are validated (shape, finiteness) as they are read.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open hidden-state dump: " + path.string());
    if (!binary::read_magic(in_, "HSD1")) throw IoError("not an HSD1 dump: " + path.string());
    if (!binary::read_le(in_, header_.version) || !binary::read_le(in_, header_.num_docs) ||
        !binary::read_le(in_, header_.num_layer_slices) ||
        !binary::read_le(in_, header_.hidden_dim))
      throw IoError("truncated HSD1 header: " + path.string());
    if (header_.version != kVersion)
      throw IoError("unsupported HSD1 version " + std::to_string(header_.version));
    if (header_.num_layer_slices == 0 || header_.hidden_dim == 0)
      throw IoError("HSD1 header declares an empty tensor shape: " + path.string());
  }

  const Header& header() const { return header_; }
  const std::filesystem::path& path() const { return path_; }
  std::size_t docs_read() const { return next_index_; }

  /// Next record, or nullopt once num_docs records have been read.
  std::optional<embedding::HiddenStateDoc> next() {
    if (next_index_ >= header_.num_docs) return std::nullopt;
    const std::size_t index = next_index_;
    embedding::HiddenStateDoc doc;
    std::uint16_t tokens = 0;
    if (!binary::read_le(in_, doc.doc_id) || !binary::read_le(in_, tokens))
      throw IoError("truncated record header", index);
    if (tokens == 0) throw IoError("record has zero tokens", index);
    doc.num_layer_slices = header_.num_layer_slices;
    doc.num_tokens = tokens;
    doc.hidden_dim = header_.hidden_dim;
    doc.states.resize(doc.num_layer_slices * doc.num_tokens * doc.hidden_dim);
    if (!binary::read_f32_le(in_, doc.states)) throw IoError("truncated record tensor", index);
    try {
      doc.validate();
    } catch (const InvalidInput& e) {
      throw IoError(e.what(), index);
    }
    ++next_index_;
    return doc;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  Header header_;
  std::size_t next_index_ = 0;
};

/// Append-only writer; the declared document count must be met before `close()`.
class Writer {
 public:
  Writer(const std::filesystem::path& path, std::uint32_t num_docs,
         std::uint16_t num_layer_slices, std::uint16_t hidden_dim)
      : out_(path, std::ios::binary | std::ios::trunc),
        expected_(num_docs),
        slices_(num_layer_slices),
        dim_(hidden_dim) {
    if (!out_) throw IoError("cannot create hidden-state dump: " + path.string());
    out_.write("HSD1", 4);
    binary::write_le(out_, kVersion);
    binary::write_le(out_, num_docs);
    binary::write_le(out_, num_layer_slices);
    binary::write_le(out_, hidden_dim);
  }

  void write(const embedding::HiddenStateDoc& doc) {
    if (written_ >= expected_) throw IoError("more records than declared in the HSD1 header");
    if (doc.num_layer_slices != slices_ || doc.hidden_dim != dim_)
      throw InvalidInput("record shape does not match the dump header");
    if (doc.num_tokens == 0 || doc.num_tokens > std::numeric_limits<std::uint16_t>::max())
      throw InvalidInput("record token count must fit in 1..65535");
    doc.validate();
    binary::write_le(out_, doc.doc_id);
    binary::write_le(out_, static_cast<std::uint16_t>(doc.num_tokens));
    binary::write_f32_le(out_, doc.states);
    ++written_;
  }

  void close() {
    if (written_ != expected_)
      throw IoError("HSD1 header declares " + std::to_string(expected_) + " records, wrote " +
                    std::to_string(written_));
    out_.flush();
    if (!out_) throw IoError("failed writing hidden-state dump");
    out_.close();
  }

 private:
  std::ofstream out_;
  std::uint32_t expected_;
  std::uint16_t slices_;
  std::uint16_t dim_;
  std::uint32_t written_ = 0;
};

}  // namespace layertopic::hsd
