#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/embedding.hpp"
#include "layertopic/error.hpp"
#include "layertopic/seed.hpp"

namespace layertopic::harness {

enum class Arm { With, Without };

inline std::string_view to_string(Arm arm) { return arm == Arm::With ? "with" : "without"; }

inline Arm parse_arm(std::string_view text) {
  if (text == "with") return Arm::With;
  if (text == "without") return Arm::Without;
  throw UsageError("stop-word arm must be 'with' or 'without', got '" + std::string(text) + "'");
}

/// Time-bin coordinates carried by dynamic-topic records.
struct BinInfo {
  std::size_t index = 0;
  double start = 0.0;
  double end = 0.0;
  std::size_t size = 0;
  std::size_t noise = 0;
  std::size_t topics_present = 0;
  bool conserved = true;
};

struct RunRecord {
  std::string mode = "static";
  std::string dataset;
  embedding::EmbeddingConfig config;
  std::size_t nr_topics = 0;
  std::size_t run_idx = 0;
  std::uint64_t seed = 0;
  Arm arm = Arm::With;
  std::optional<double> tc;
  std::optional<double> td;
  std::size_t topic_count_found = 0;
  std::size_t topic_count = 0;
  bool under_count = false;
  double runtime_seconds = 0.0;
  nlohmann::json params = nlohmann::json::object();
  std::string params_hash;
  std::optional<std::string> error;
  std::optional<BinInfo> bin;

  /// Identifies the grid cell and run, independent of the parameter snapshot.
  std::string run_key() const {
    return mode + "|" + dataset + "|" + std::string(to_string(arm)) + "|" + config.tag() + "|" +
           std::to_string(nr_topics) + "|" + std::to_string(run_idx);
  }
};

inline std::string snapshot_hash(const nlohmann::json& params) { return hex64(fnv1a(params.dump())); }

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j;
  j["mode"] = r.mode;
  j["dataset"] = r.dataset;
  j["config"] = std::string(embedding::to_string(r.config.aggregation));
  j["pooling"] = std::string(embedding::to_string(r.config.pooling));
  j["nr_topics"] = r.nr_topics;
  j["run_idx"] = r.run_idx;
  j["seed"] = r.seed;
  j["stopword_arm"] = std::string(to_string(r.arm));
  j["tc"] = r.tc ? nlohmann::json(*r.tc) : nlohmann::json(nullptr);
  j["td"] = r.td ? nlohmann::json(*r.td) : nlohmann::json(nullptr);
  j["topic_count_found"] = r.topic_count_found;
  j["topic_count"] = r.topic_count;
  j["under_count_flag"] = r.under_count;
  j["runtime_seconds"] = r.runtime_seconds;
  j["params_hash"] = r.params_hash;
  j["params"] = r.params;
  if (r.error) j["error"] = *r.error;
  if (r.bin) {
    j["bin"] = {{"index", r.bin->index},   {"start", r.bin->start},
                {"end", r.bin->end},       {"size", r.bin->size},
                {"noise", r.bin->noise},   {"topics_present", r.bin->topics_present},
                {"conserved", r.bin->conserved}};
  }
  return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.mode = j.value("mode", "static");
  r.dataset = j.at("dataset").get<std::string>();
  auto aggregation = embedding::parse_aggregation(j.at("config").get<std::string>());
  auto pooling = embedding::parse_pooling(j.at("pooling").get<std::string>());
  if (!aggregation || !pooling) throw InvalidInput("record has an unknown embedding config");
  r.config = {*aggregation, *pooling};
  r.nr_topics = j.at("nr_topics").get<std::size_t>();
  r.run_idx = j.at("run_idx").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.arm = parse_arm(j.at("stopword_arm").get<std::string>());
  if (!j.at("tc").is_null()) r.tc = j.at("tc").get<double>();
  if (!j.at("td").is_null()) r.td = j.at("td").get<double>();
  r.topic_count_found = j.value("topic_count_found", std::size_t{0});
  r.topic_count = j.value("topic_count", std::size_t{0});
  r.under_count = j.value("under_count_flag", false);
  r.runtime_seconds = j.value("runtime_seconds", 0.0);
  r.params = j.value("params", nlohmann::json::object());
  r.params_hash = j.value("params_hash", std::string());
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  if (j.contains("bin")) {
    const auto& b = j.at("bin");
    r.bin = BinInfo{b.at("index").get<std::size_t>(),  b.at("start").get<double>(),
                    b.at("end").get<double>(),         b.at("size").get<std::size_t>(),
                    b.at("noise").get<std::size_t>(),  b.value("topics_present", std::size_t{0}),
                    b.value("conserved", true)};
  }
  return r;
}

/// Reads a records file. A trailing line without a newline (an interrupted
/// write) is ignored; malformed complete lines are errors.
inline std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open records file: " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<RunRecord> out;
  std::size_t pos = 0, line = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) break;
    ++line;
    const std::string_view text(content.data() + pos, nl - pos);
    pos = nl + 1;
    if (text.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(text)));
    } catch (const nlohmann::json::exception& e) {
      throw RecordError(line, std::string("malformed run record: ") + e.what());
    }
  }
  return out;
}

/// Append-only JSON-lines writer. Each `append` call writes its lines with a
/// single write and flush under a lock, so concurrent cells never interleave.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open records file for append: " + path.string());
  }

  void append(std::span<const RunRecord> records) {
    std::string buffer;
    for (const auto& r : records) {
      buffer += to_json(r).dump();
      buffer.push_back('\n');
    }
    std::lock_guard lock(mutex_);
    out_.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    out_.flush();
    if (!out_) throw IoError("failed appending to records file: " + path_.string());
  }

  void append(const RunRecord& record) { append(std::span<const RunRecord>(&record, 1)); }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace layertopic::harness
