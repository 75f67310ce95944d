#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/error.hpp"
#include "layertopic/topic_model.hpp"

// Line-delimited JSON exports: one {"type":"meta"} header line followed by
// one record per topic (model export) or per time bin (time-slice export).
namespace layertopic::topic {

struct TopicRecord {
  std::size_t topic_id = 0;
  std::size_t size = 0;
  std::vector<TopicWord> top_words;
  bool degenerate = false;
};

struct ModelExport {
  nlohmann::json meta;
  std::vector<TopicRecord> topics;
};

namespace detail {

inline nlohmann::json words_json(const std::vector<TopicWord>& words) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& w : words) arr.push_back({w.term, w.score});
  return arr;
}

inline std::vector<TopicWord> words_from_json(const nlohmann::json& arr) {
  std::vector<TopicWord> out;
  for (const auto& w : arr) out.push_back({w.at(0).get<std::string>(), w.at(1).get<double>()});
  return out;
}

inline std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw RecordError(row, std::string("malformed JSON line: ") + e.what());
    }
  }
  if (out.empty() || out.front().value("type", "") != "meta")
    throw InvalidInput(path.string() + " does not start with a meta record");
  return out;
}

}  // namespace detail

inline void write_model(const std::filesystem::path& path, const TopicModel& model,
                        nlohmann::json meta = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create model export: " + path.string());
  meta["type"] = "meta";
  meta["params"] = model.params;
  meta["num_docs"] = model.num_docs();
  meta["noise"] = model.noise_count();
  meta["num_topics"] = model.num_topics();
  meta["initial_topic_count"] = model.initial_topic_count;
  meta["under_count"] = model.under_count;
  meta["vocab_size"] = model.vocab.size();
  meta["top_n"] = model.top_n;
  out << meta.dump() << '\n';
  for (std::size_t k = 0; k < model.num_topics(); ++k) {
    nlohmann::json rec{{"type", "topic"},
                       {"topic_id", k},
                       {"size", model.sizes[k]},
                       {"degenerate", model.top_words[k].degenerate},
                       {"top_words", detail::words_json(model.top_words[k].words)}};
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing model export: " + path.string());
}

inline ModelExport read_model(const std::filesystem::path& path) {
  const auto lines = detail::read_json_lines(path);
  ModelExport out;
  out.meta = lines.front();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& j = lines[i];
    if (j.value("type", "") != "topic") continue;
    out.topics.push_back({j.at("topic_id").get<std::size_t>(), j.at("size").get<std::size_t>(),
                          detail::words_from_json(j.at("top_words")), j.value("degenerate", false)});
  }
  return out;
}

struct TimeSliceExport {
  nlohmann::json meta;
  std::vector<TimeBin> bins;
  std::vector<std::vector<std::size_t>> frequencies;
  std::vector<std::vector<std::vector<TopicWord>>> top_words;  // per bin, per topic
};

inline void write_time_slices(const std::filesystem::path& path, const TimeSlicedTopics& slices,
                              const TopicModel& model, nlohmann::json meta = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create time-slice export: " + path.string());
  meta["type"] = "meta";
  meta["num_bins"] = slices.num_bins();
  meta["num_topics"] = model.num_topics();
  meta["params"] = model.params;
  out << meta.dump() << '\n';
  const std::size_t n = std::min(model.top_n, model.vocab.size());
  for (std::size_t b = 0; b < slices.num_bins(); ++b) {
    const auto ranked = top_words(slices.topic_term[b], model.vocab, n);
    nlohmann::json words = nlohmann::json::array();
    for (std::size_t k = 0; k < ranked.size(); ++k)
      words.push_back(slices.frequencies[b][k] > 0 ? detail::words_json(ranked[k].words)
                                                   : nlohmann::json::array());
    nlohmann::json rec{{"type", "bin"},
                       {"bin", b},
                       {"start", slices.bins[b].start},
                       {"end", slices.bins[b].end},
                       {"size", slices.bins[b].doc_count},
                       {"noise", slices.bins[b].noise},
                       {"frequencies", slices.frequencies[b]},
                       {"top_words", words}};
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing time-slice export: " + path.string());
}

inline TimeSliceExport read_time_slices(const std::filesystem::path& path) {
  const auto lines = detail::read_json_lines(path);
  TimeSliceExport out;
  out.meta = lines.front();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& j = lines[i];
    if (j.value("type", "") != "bin") continue;
    out.bins.push_back({j.at("start").get<double>(), j.at("end").get<double>(),
                        j.at("size").get<std::size_t>(), j.at("noise").get<std::size_t>()});
    out.frequencies.push_back(j.at("frequencies").get<std::vector<std::size_t>>());
    auto& per_topic = out.top_words.emplace_back();
    for (const auto& words : j.at("top_words")) per_topic.push_back(detail::words_from_json(words));
  }
  return out;
}

}  // namespace layertopic::topic
