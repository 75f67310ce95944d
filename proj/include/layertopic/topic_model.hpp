#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/corpus.hpp"
#include "layertopic/ctfidf.hpp"
#include "layertopic/error.hpp"
#include "layertopic/hdbscan.hpp"
#include "layertopic/reducer.hpp"

namespace layertopic::topic {

struct TopicModel {
  cluster::Labeling labeling;
  MatrixD topic_term;  // (num_topics, vocab)
  std::vector<RankedTopic> top_words;
  std::vector<std::size_t> sizes;
  std::vector<std::string> vocab;
  /// Topics found by clustering before any reduction.
  std::size_t initial_topic_count = 0;
  /// Clustering found no more topics than requested, so nothing was merged.
  bool under_count = false;
  std::size_t top_n = 10;
  /// Every stage parameter plus the seed.
  nlohmann::json params = nlohmann::json::object();

  std::size_t num_topics() const { return static_cast<std::size_t>(topic_term.rows()); }
  std::size_t num_docs() const { return labeling.labels.size(); }
  std::size_t noise_count() const { return labeling.noise_count(); }
};

namespace detail {

inline void refresh(TopicModel& model, const corpus::DocTermCounts& doc_term) {
  model.sizes = model.labeling.sizes();
  model.topic_term = ctfidf(doc_term, model.labeling.labels);
  model.top_words = top_words(model.topic_term, model.vocab, model.top_n);
}

inline double cosine(const MatrixD& m, Eigen::Index a, Eigen::Index b) {
  const double na = m.row(a).norm(), nb = m.row(b).norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return m.row(a).dot(m.row(b)) / (na * nb);
}

}  // namespace detail

/// Builds topics from a labeling (no reduction).
inline TopicModel build_model(cluster::Labeling labeling, const corpus::DocTermCounts& doc_term,
                              std::size_t top_n = 10) {
  if (labeling.labels.size() != doc_term.num_docs())
    throw InvalidInput("labeling covers " + std::to_string(labeling.labels.size()) +
                       " documents, corpus has " + std::to_string(doc_term.num_docs()));
  TopicModel model;
  model.labeling = std::move(labeling);
  model.vocab = doc_term.vocab;
  model.top_n = std::min(top_n, doc_term.vocab_size());
  detail::refresh(model, doc_term);
  model.initial_topic_count = model.num_topics();
  return model;
}

/// Repeatedly merges the smallest topic into its most cosine-similar peer
/// until at most `target` topics remain. Ties pick the later (smaller) topic
/// to absorb and the lowest-id partner.
inline TopicModel reduce_topics(TopicModel model, const corpus::DocTermCounts& doc_term,
                                std::size_t target) {
  if (target < 1) throw ParameterError("target topic count must be >= 1");
  if (model.num_topics() <= target) {
    model.under_count = model.num_topics() < target;
    return model;
  }
  model.under_count = false;
  while (model.num_topics() > target) {
    const auto k = static_cast<Eigen::Index>(model.num_topics());
    Eigen::Index smallest = 0;
    for (Eigen::Index t = 1; t < k; ++t)
      if (model.sizes[static_cast<std::size_t>(t)] <= model.sizes[static_cast<std::size_t>(smallest)])
        smallest = t;
    Eigen::Index partner = -1;
    double best = -2.0;
    for (Eigen::Index t = 0; t < k; ++t) {
      if (t == smallest) continue;
      const double sim = detail::cosine(model.topic_term, smallest, t);
      if (sim > best) {
        best = sim;
        partner = t;
      }
    }
    for (int& l : model.labeling.labels) {
      if (l == smallest) l = static_cast<int>(partner);
      if (l > smallest) --l;
    }
    cluster::canonicalize(model.labeling);
    detail::refresh(model, doc_term);
  }
  return model;
}

struct FitParams {
  reducer::ReducerParams reducer;
  cluster::ClusterParams cluster;
  /// Requested topic count; nullopt keeps whatever clustering finds.
  std::optional<std::size_t> nr_topics;
  std::size_t top_n = 10;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

inline nlohmann::json to_json(const FitParams& p) {
  nlohmann::json j;
  j["reducer"] = reducer::to_json(p.reducer);
  j["cluster"] = cluster::to_json(p.cluster);
  j["nr_topics"] = p.nr_topics ? nlohmann::json(*p.nr_topics) : nlohmann::json(nullptr);
  j["top_n"] = p.top_n;
  j["seed"] = p.seed;
  return j;
}

/// reduce -> cluster -> c-TF-IDF -> topic reduction -> top words.
inline TopicModel fit(const MatrixF& embeddings, const corpus::DocTermCounts& doc_term,
                      const FitParams& params) {
  if (static_cast<std::size_t>(embeddings.rows()) != doc_term.num_docs())
    throw InvalidInput("embedding rows (" + std::to_string(embeddings.rows()) +
                       ") do not match documents (" + std::to_string(doc_term.num_docs()) + ")");
  reducer::ReducerParams rp = params.reducer;
  rp.seed = params.seed;
  rp.workers = params.workers;
  const MatrixD reduced = reducer::reduce(embeddings, rp);
  cluster::Labeling labeling = cluster::hdbscan(reduced, params.cluster, params.workers);
  if (labeling.num_clusters() == 0) throw ModelError("no topics found");

  TopicModel model = build_model(std::move(labeling), doc_term, params.top_n);
  if (params.nr_topics) model = reduce_topics(std::move(model), doc_term, *params.nr_topics);
  model.params = to_json(params);
  return model;
}

inline TopicModel fit(const MatrixF& embeddings, std::span<const corpus::Document> docs,
                      const FitParams& params, std::size_t min_df = 1) {
  const auto tokens = corpus::tokenize_all(docs);
  return fit(embeddings, corpus::build_doc_term(tokens, min_df), params);
}

// ---------------------------------------------------------------------------
// Topics over time

enum class Binning { EqualWidth, CalendarYear };

struct TimeBin {
  double start = 0.0;  // inclusive
  double end = 0.0;    // exclusive, except the last bin which is closed
  std::size_t doc_count = 0;
  std::size_t noise = 0;
};

struct TimeSlicedTopics {
  std::vector<TimeBin> bins;
  std::vector<MatrixD> topic_term;                      // per bin (num_topics, vocab)
  std::vector<std::vector<std::size_t>> frequencies;   // per bin, per topic doc counts
  std::vector<std::size_t> bin_of_doc;

  std::size_t num_bins() const { return bins.size(); }

  /// Σ_topic frequency + noise == bin size, for every bin.
  bool conserved() const {
    for (std::size_t b = 0; b < bins.size(); ++b) {
      std::size_t total = bins[b].noise;
      for (auto f : frequencies[b]) total += f;
      if (total != bins[b].doc_count) return false;
    }
    return true;
  }
};

/// Year of a timestamp: values in [1, 9999] are taken as years, anything
/// else as days since 1970-01-01.
inline std::int64_t year_of(std::int64_t timestamp) {
  if (timestamp >= 1 && timestamp <= 9999) return timestamp;
  const std::chrono::sys_days day{std::chrono::days{timestamp}};
  return static_cast<int>(std::chrono::year_month_day{day}.year());
}

/// Recomputes c-TF-IDF per time bin, keeping every document's global topic.
inline TimeSlicedTopics topics_over_time(const TopicModel& model,
                                         const corpus::DocTermCounts& doc_term,
                                         std::span<const std::optional<std::int64_t>> timestamps,
                                         std::size_t num_bins = 9,
                                         Binning binning = Binning::EqualWidth) {
  const std::size_t n = model.num_docs();
  if (timestamps.size() != n || doc_term.num_docs() != n)
    throw InvalidInput("timestamps, documents and labels must align");
  if (n == 0) throw InvalidInput("no documents");
  std::vector<double> when(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!timestamps[i])
      throw ConfigError("document " + std::to_string(i) + " has no timestamp");
    when[i] = static_cast<double>(binning == Binning::CalendarYear ? year_of(*timestamps[i])
                                                                   : *timestamps[i]);
  }
  const auto [lo_it, hi_it] = std::minmax_element(when.begin(), when.end());
  const double lo = *lo_it, hi = *hi_it;

  TimeSlicedTopics out;
  double width = 0.0;
  if (binning == Binning::CalendarYear) {
    num_bins = static_cast<std::size_t>(hi - lo) + 1;
    width = 1.0;
  } else {
    if (num_bins < 1) throw ParameterError("num_bins must be >= 1");
    width = (hi - lo) / static_cast<double>(num_bins);
  }
  out.bins.resize(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    out.bins[b].start = lo + width * static_cast<double>(b);
    out.bins[b].end = b + 1 == num_bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  out.bin_of_doc.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t b = 0;
    if (width > 0) b = static_cast<std::size_t>(std::floor((when[i] - lo) / width));
    b = std::min(b, num_bins - 1);
    out.bin_of_doc[i] = b;
    ++out.bins[b].doc_count;
    if (model.labeling.labels[i] < 0) ++out.bins[b].noise;
  }

  const std::size_t k = model.num_topics();
  out.frequencies.assign(num_bins, std::vector<std::size_t>(k, 0));
  std::vector<std::vector<int>> bin_labels(num_bins, std::vector<int>(n, -1));
  for (std::size_t i = 0; i < n; ++i) {
    const int l = model.labeling.labels[i];
    if (l < 0) continue;
    ++out.frequencies[out.bin_of_doc[i]][static_cast<std::size_t>(l)];
    bin_labels[out.bin_of_doc[i]][i] = l;
  }
  out.topic_term.reserve(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    const MatrixD counts = class_term_counts(doc_term, bin_labels[b], k);
    const auto active = static_cast<std::size_t>(
        std::count_if(out.frequencies[b].begin(), out.frequencies[b].end(),
                      [](std::size_t f) { return f > 0; }));
    out.topic_term.push_back(ctfidf_from_counts(counts, active));
  }
  return out;
}

}  // namespace layertopic::topic
