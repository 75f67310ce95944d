#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/error.hpp"
#include "layertopic/model_io.hpp"
#include "layertopic/records.hpp"

// Series files for plotting: metric curves over topic counts, per-topic word
// score bars and per-topic frequency over time bins. Output is plain JSON.
namespace layertopic::harness {

enum class PlotKind { MetricCurves, WordScores, TopicFrequency };

inline PlotKind parse_plot_kind(std::string_view text) {
  if (text == "metric_curves") return PlotKind::MetricCurves;
  if (text == "word_scores") return PlotKind::WordScores;
  if (text == "topic_frequency") return PlotKind::TopicFrequency;
  throw UsageError("unknown plot kind '" + std::string(text) +
                   "' (expected metric_curves, word_scores or topic_frequency)");
}

/// Per (dataset/arm, config): points (nr_topics, mean tc, mean td) over
/// successful static records. `top` keeps only the best configs by mean tc
/// over all their points, per dataset column.
inline nlohmann::json metric_curves(std::span<const RunRecord> records, std::optional<std::size_t> top = {}) {
  struct Acc {
    double tc = 0, td = 0;
    std::size_t n = 0;
  };
  // column -> config tag -> nr_topics -> acc
  std::map<std::string, std::map<std::string, std::map<std::size_t, Acc>>> acc;
  for (const auto& r : records) {
    if (r.bin || r.error || !r.tc || !r.td) continue;
    auto& a = acc[r.dataset + "/" + std::string(to_string(r.arm))][r.config.tag()][r.nr_topics];
    a.tc += *r.tc;
    a.td += *r.td;
    ++a.n;
  }
  nlohmann::json out{{"kind", "metric_curves"}, {"series", nlohmann::json::array()}};
  for (const auto& [column, by_config] : acc) {
    std::vector<std::pair<double, std::string>> ranking;
    for (const auto& [tag, points] : by_config) {
      double sum = 0;
      for (const auto& [k, a] : points) sum += a.tc / static_cast<double>(a.n);
      ranking.emplace_back(sum / static_cast<double>(points.size()), tag);
    }
    std::stable_sort(ranking.begin(), ranking.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    if (top && ranking.size() > *top) ranking.resize(*top);
    for (const auto& [score, tag] : ranking) {
      nlohmann::json s{{"column", column}, {"config", tag}, {"mean_tc", score}};
      nlohmann::json tc = nlohmann::json::array(), td = nlohmann::json::array();
      for (const auto& [k, a] : by_config.at(tag)) {
        tc.push_back({k, a.tc / static_cast<double>(a.n)});
        td.push_back({k, a.td / static_cast<double>(a.n)});
      }
      s["tc"] = std::move(tc);
      s["td"] = std::move(td);
      out["series"].push_back(std::move(s));
    }
  }
  return out;
}

/// Bars of the highest-scoring words for the first `max_topics` topics.
inline nlohmann::json word_scores(const topic::ModelExport& model, std::size_t max_topics = 8,
                                  std::size_t words = 8) {
  nlohmann::json out{{"kind", "word_scores"}, {"series", nlohmann::json::array()}};
  for (std::size_t i = 0; i < std::min(max_topics, model.topics.size()); ++i) {
    const auto& t = model.topics[i];
    nlohmann::json bars = nlohmann::json::array();
    for (std::size_t w = 0; w < std::min(words, t.top_words.size()); ++w)
      bars.push_back({t.top_words[w].term, t.top_words[w].score});
    out["series"].push_back({{"topic_id", t.topic_id}, {"size", t.size}, {"bars", std::move(bars)}});
  }
  return out;
}

/// One (bin, frequency) series per topic, with bin boundaries alongside.
inline nlohmann::json topic_frequency(const topic::TimeSliceExport& slices) {
  nlohmann::json out{{"kind", "topic_frequency"}, {"bins", nlohmann::json::array()},
                     {"series", nlohmann::json::array()}};
  std::size_t topics = 0;
  for (std::size_t b = 0; b < slices.bins.size(); ++b) {
    out["bins"].push_back({{"bin", b},
                           {"start", slices.bins[b].start},
                           {"end", slices.bins[b].end},
                           {"size", slices.bins[b].doc_count},
                           {"noise", slices.bins[b].noise}});
    topics = std::max(topics, slices.frequencies[b].size());
  }
  for (std::size_t k = 0; k < topics; ++k) {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t b = 0; b < slices.bins.size(); ++b)
      points.push_back({b, k < slices.frequencies[b].size() ? slices.frequencies[b][k] : 0});
    out["series"].push_back({{"topic_id", k}, {"points", std::move(points)}});
  }
  return out;
}

}  // namespace layertopic::harness
