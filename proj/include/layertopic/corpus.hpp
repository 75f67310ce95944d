#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/error.hpp"
#include "layertopic/log.hpp"
#include "layertopic/text.hpp"

namespace layertopic::corpus {

struct Document {
  std::size_t doc_id = 0;
  std::string raw_text;
  std::optional<std::int64_t> timestamp;
};

// ---------------------------------------------------------------------------
// Stop words

class StopList {
 public:
  StopList() = default;
  StopList(std::unordered_set<std::string> words, std::filesystem::path source)
      : words_(std::move(words)), source_(std::move(source)) {}

  /// One word per line, '#' starts a comment, blank lines ignored.
  static StopList load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stop list: " + path.string());
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto last = line.find_last_not_of(" \t\r");
      std::string word = to_lower(std::string_view(line).substr(first, last - first + 1));
      if (word.find_first_of(" \t") != std::string::npos)
        throw InvalidInput("stop list entry contains whitespace: " + word);
      words.insert(std::move(word));
    }
    return {std::move(words), path};
  }

  bool contains(std::string_view word) const { return words_.contains(std::string(word)); }
  std::size_t size() const { return words_.size(); }
  const std::filesystem::path& source() const { return source_; }

 private:
  std::unordered_set<std::string> words_;
  std::filesystem::path source_;
};

/// Drops stop-word tokens and rejoins the survivors with single spaces.
inline std::string remove_stopwords(std::string_view text, const StopList& stoplist) {
  std::string out;
  for (const auto& token : tokenize(text)) {
    if (stoplist.contains(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Document-term counts

struct DocTermCounts {
  std::vector<std::string> vocab;  // sorted, unique
  /// Per document: (term index, count) pairs sorted by term index.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows;

  std::size_t num_docs() const { return rows.size(); }
  std::size_t vocab_size() const { return vocab.size(); }

  std::optional<std::uint32_t> index_of(std::string_view term) const {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), term);
    if (it == vocab.end() || *it != term) return std::nullopt;
    return static_cast<std::uint32_t>(it - vocab.begin());
  }
};

/// Counts tokens from already-tokenized documents, keeping terms present in at
/// least `min_df` documents.
inline DocTermCounts build_doc_term(std::span<const std::vector<std::string>> docs,
                                    std::size_t min_df = 1) {
  if (min_df < 1) throw ParameterError("min_df must be >= 1");
  std::map<std::string, std::size_t> df;
  for (const auto& tokens : docs) {
    std::vector<std::string_view> unique(tokens.begin(), tokens.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto t : unique) ++df[std::string(t)];
  }
  DocTermCounts out;
  for (const auto& [term, count] : df)
    if (count >= min_df) out.vocab.push_back(term);
  if (out.vocab.empty())
    throw ConfigError("empty vocabulary at min_df=" + std::to_string(min_df) +
                      "; try a lower min_df");

  std::unordered_map<std::string_view, std::uint32_t> index;
  index.reserve(out.vocab.size());
  for (std::size_t i = 0; i < out.vocab.size(); ++i)
    index.emplace(out.vocab[i], static_cast<std::uint32_t>(i));

  out.rows.resize(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& t : docs[d])
      if (auto it = index.find(t); it != index.end()) ++counts[it->second];
    out.rows[d].assign(counts.begin(), counts.end());
  }
  return out;
}

inline std::vector<std::vector<std::string>> tokenize_all(std::span<const Document> docs) {
  std::vector<std::vector<std::string>> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(tokenize(d.raw_text));
  return out;
}

// ---------------------------------------------------------------------------
// Loading

enum class FileFormat { Auto, Delimited, JsonLines };

struct CorpusSchema {
  std::string text_column = "text";
  std::optional<std::string> time_column;
  char delimiter = ',';
  FileFormat format = FileFormat::Auto;
};

namespace detail {

// Parses an integer ("2016") or an ISO date ("2016-03-01", "2016-03-01T..."),
// the latter as days since 1970-01-01.
inline std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  std::int64_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc() && end == text.data() + text.size()) return value;
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() >= 10 && text[4] == '-' && text[7] == '-') {
    auto r1 = std::from_chars(text.data(), text.data() + 4, y);
    auto r2 = std::from_chars(text.data() + 5, text.data() + 7, m);
    auto r3 = std::from_chars(text.data() + 8, text.data() + 10, d);
    if (r1.ec == std::errc() && r2.ec == std::errc() && r3.ec == std::errc() &&
        r1.ptr == text.data() + 4 && r2.ptr == text.data() + 7 && r3.ptr == text.data() + 10) {
      const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                            std::chrono::day{d}};
      if (ymd.ok()) return std::chrono::sys_days{ymd}.time_since_epoch().count();
    }
  }
  return std::nullopt;
}

// Reads one RFC 4180-style record (quoted fields may span lines).
// Returns false at end of input; a blank line gives an empty field list.
inline bool read_delimited_record(std::istream& in, char delim, std::vector<std::string>& fields,
                                  std::size_t& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool field_quoted = false;
  char c = 0;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
      continue;
    }
    if (c == '\r' && in.peek() == '\n') continue;
    if (c == '"' && field.empty() && !field_quoted) {
      in_quotes = true;
      field_quoted = true;
    } else if (c == delim) {
      fields.push_back(std::move(field));
      field.clear();
      field_quoted = false;
    } else if (c == '\n') {
      ++line_no;
      // A blank line yields no fields; a quoted empty field still counts.
      if (!fields.empty() || !field.empty() || field_quoted) fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw RecordError(line_no + 1, "unterminated quoted field");
  if (!any) return false;
  if (!fields.empty() || !field.empty() || field_quoted) fields.push_back(std::move(field));
  ++line_no;
  return true;
}

inline void finish_document(std::vector<Document>& docs, std::string text,
                            std::optional<std::int64_t> ts, std::size_t row) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    logger()->warn("row {}: empty document text", row);
  docs.push_back({docs.size(), std::move(text), ts});
}

}  // namespace detail

/// Loads documents in file order with ids 0..n-1.
inline std::vector<Document> load_corpus(const std::filesystem::path& path,
                                         const CorpusSchema& schema = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus: " + path.string());

  FileFormat format = schema.format;
  if (format == FileFormat::Auto) {
    const auto ext = path.extension().string();
    format = (ext == ".jsonl" || ext == ".ndjson") ? FileFormat::JsonLines : FileFormat::Delimited;
  }

  std::vector<Document> docs;
  if (format == FileFormat::JsonLines) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw RecordError(row, std::string("malformed JSON record: ") + e.what());
      }
      if (!record.is_object() || !record.contains(schema.text_column))
        throw SchemaError("row " + std::to_string(row) + ": missing column '" +
                          schema.text_column + "'");
      const auto& text_field = record[schema.text_column];
      std::string text = text_field.is_string() ? text_field.get<std::string>()
                         : text_field.is_null() ? std::string()
                                                : text_field.dump();
      std::optional<std::int64_t> ts;
      if (schema.time_column) {
        if (!record.contains(*schema.time_column))
          throw SchemaError("row " + std::to_string(row) + ": missing column '" +
                            *schema.time_column + "'");
        const auto& tv = record[*schema.time_column];
        if (tv.is_number_integer()) {
          ts = tv.get<std::int64_t>();
        } else if (tv.is_string()) {
          ts = detail::parse_timestamp(tv.get<std::string>());
        }
        if (!ts) throw RecordError(row, "unparseable timestamp: " + tv.dump());
      }
      detail::finish_document(docs, std::move(text), ts, row);
    }
    return docs;
  }

  std::vector<std::string> fields;
  std::size_t line_no = 0;
  if (!detail::read_delimited_record(in, schema.delimiter, fields, line_no))
    throw SchemaError("corpus file is empty: " + path.string());
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(fields.begin(), fields.end(), name);
    if (it == fields.end()) throw SchemaError("missing column '" + name + "' in " + path.string());
    return static_cast<std::size_t>(it - fields.begin());
  };
  const std::size_t text_col = column(schema.text_column);
  std::optional<std::size_t> time_col;
  if (schema.time_column) time_col = column(*schema.time_column);
  const std::size_t width = fields.size();

  std::size_t row = 1;
  while (detail::read_delimited_record(in, schema.delimiter, fields, line_no)) {
    ++row;
    if (fields.empty()) continue;  // blank line
    if (fields.size() != width)
      throw RecordError(row, "expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(fields.size()));
    std::optional<std::int64_t> ts;
    if (time_col) {
      ts = detail::parse_timestamp(fields[*time_col]);
      if (!ts) throw RecordError(row, "unparseable timestamp: '" + fields[*time_col] + "'");
    }
    detail::finish_document(docs, std::move(fields[text_col]), ts, row);
  }
  return docs;
}

}  // namespace layertopic::corpus
