#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/error.hpp"
#include "layertopic/log.hpp"
#include "layertopic/parallel.hpp"

namespace layertopic::metrics {

/// How a word pair that never co-occurs is scored.
enum class ZeroCooccurrence {
  MinusOne,  // limit value -1
  Epsilon,   // ln((P(i,j)+eps) / (P(i)P(j))) / -ln(P(i,j)+eps)
};

struct MetricParams {
  std::size_t coherence_top_n = 10;
  std::size_t diversity_top_k = 25;
  std::size_t window = 10;
  ZeroCooccurrence zero_rule = ZeroCooccurrence::MinusOne;
  double epsilon = 1e-12;
};

inline nlohmann::json to_json(const MetricParams& p) {
  return {{"coherence_top_n", p.coherence_top_n},
          {"diversity_top_k", p.diversity_top_k},
          {"window", p.window},
          {"zero_cooccurrence", p.zero_rule == ZeroCooccurrence::MinusOne ? "minus_one" : "epsilon"},
          {"epsilon", p.epsilon}};
}

struct CoherenceResult {
  double score = 0.0;
  /// nullopt for topics skipped because fewer than two words were usable.
  std::vector<std::optional<double>> per_topic;
  std::size_t skipped_words = 0;
  std::size_t skipped_topics = 0;
};

/// Boolean occurrence counts over sliding windows.
struct WindowCounts {
  std::uint64_t windows = 0;
  std::vector<std::uint64_t> word;  // per target id
  std::vector<std::uint64_t> pair;  // per requested pair
};

namespace detail {

inline std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace detail

/// Counts, over every window of `window` consecutive tokens (documents
/// shorter than the window form one window; empty documents none), how many
/// windows contain each target word and each requested pair.
inline WindowCounts count_windows(std::span<const std::vector<std::string>> reference,
                                  const std::unordered_map<std::string_view, std::uint32_t>& targets,
                                  const std::unordered_map<std::uint64_t, std::uint32_t>& pairs,
                                  std::size_t window, unsigned workers = 1) {
  const std::size_t chunks = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(1, reference.size()));
  std::vector<WindowCounts> partial(chunks);
  const std::size_t step = (reference.size() + chunks - 1) / std::max<std::size_t>(1, chunks);
  parallel_for(chunks, workers, [&](std::size_t first, std::size_t last) {
    std::vector<std::int64_t> ids;
    std::vector<std::uint32_t> present;
    for (std::size_t c = first; c < last; ++c) {
      WindowCounts& local = partial[c];
      local.word.assign(targets.size(), 0);
      local.pair.assign(pairs.size(), 0);
      const std::size_t begin = c * step;
      const std::size_t end = std::min(reference.size(), begin + step);
      for (std::size_t d = begin; d < end; ++d) {
        const auto& tokens = reference[d];
        if (tokens.empty()) continue;
        ids.resize(tokens.size());
        for (std::size_t t = 0; t < tokens.size(); ++t) {
          auto it = targets.find(tokens[t]);
          ids[t] = it == targets.end() ? std::int64_t{-1} : std::int64_t{it->second};
        }
        const std::size_t span_len = std::min(window, tokens.size());
        const std::size_t count = tokens.size() - span_len + 1;
        local.windows += count;
        for (std::size_t w = 0; w < count; ++w) {
          present.clear();
          for (std::size_t t = w; t < w + span_len; ++t)
            if (ids[t] >= 0) present.push_back(static_cast<std::uint32_t>(ids[t]));
          std::sort(present.begin(), present.end());
          present.erase(std::unique(present.begin(), present.end()), present.end());
          for (std::size_t i = 0; i < present.size(); ++i) {
            ++local.word[present[i]];
            for (std::size_t j = i + 1; j < present.size(); ++j)
              if (auto it = pairs.find(detail::pair_key(present[i], present[j])); it != pairs.end())
                ++local.pair[it->second];
          }
        }
      }
    }
  });
  WindowCounts total;
  total.word.assign(targets.size(), 0);
  total.pair.assign(pairs.size(), 0);
  for (const auto& p : partial) {
    total.windows += p.windows;
    for (std::size_t i = 0; i < p.word.size(); ++i) total.word[i] += p.word[i];
    for (std::size_t i = 0; i < p.pair.size(); ++i) total.pair[i] += p.pair[i];
  }
  return total;
}

/// NPMI of one pair from window counts.
inline double pair_npmi(std::uint64_t ci, std::uint64_t cj, std::uint64_t cij, std::uint64_t windows,
                        const MetricParams& params) {
  const auto n = static_cast<double>(windows);
  if (cij == windows) return 1.0;  // both words in every window
  if (cij == 0) {
    if (params.zero_rule == ZeroCooccurrence::MinusOne) return -1.0;
    const double pij = params.epsilon;
    const double pi = static_cast<double>(ci) / n, pj = static_cast<double>(cj) / n;
    return std::clamp(std::log(pij / (pi * pj)) / -std::log(pij), -1.0, 1.0);
  }
  // ln(P(i,j) / (P(i)P(j))) / -ln P(i,j), written over integer counts.
  const double num = std::log((static_cast<double>(cij) * n) /
                              (static_cast<double>(ci) * static_cast<double>(cj)));
  const double den = std::log(n / static_cast<double>(cij));
  return std::clamp(num / den, -1.0, 1.0);
}

/// Mean NPMI over word pairs, then over topics. Uses the first
/// `coherence_top_n` words of each topic; words absent from the reference
/// are skipped and topics left with fewer than two words are dropped.
inline CoherenceResult npmi_coherence(std::span<const std::vector<std::string>> topics,
                                      std::span<const std::vector<std::string>> reference,
                                      const MetricParams& params = {}, unsigned workers = 1) {
  if (params.window < 1) throw ParameterError("window must be >= 1");
  if (reference.empty()) throw InvalidInput("reference corpus is empty");

  std::unordered_map<std::string_view, std::uint32_t> targets;
  std::vector<std::vector<std::uint32_t>> topic_ids(topics.size());
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const std::size_t limit = std::min(params.coherence_top_n, topics[t].size());
    for (std::size_t w = 0; w < limit; ++w) {
      auto [it, inserted] = targets.try_emplace(topics[t][w], static_cast<std::uint32_t>(targets.size()));
      if (std::find(topic_ids[t].begin(), topic_ids[t].end(), it->second) == topic_ids[t].end())
        topic_ids[t].push_back(it->second);
    }
  }
  std::unordered_map<std::uint64_t, std::uint32_t> pairs;
  for (const auto& ids : topic_ids)
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j)
        pairs.try_emplace(detail::pair_key(ids[i], ids[j]), static_cast<std::uint32_t>(pairs.size()));

  const WindowCounts counts = count_windows(reference, targets, pairs, params.window, workers);
  if (counts.windows == 0) throw InvalidInput("reference corpus is empty");

  CoherenceResult out;
  out.per_topic.resize(topics.size());
  double total = 0.0;
  std::size_t scored = 0;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    std::vector<std::uint32_t> usable;
    for (auto id : topic_ids[t]) {
      if (counts.word[id] > 0)
        usable.push_back(id);
      else
        ++out.skipped_words;
    }
    if (usable.size() < 2) {
      ++out.skipped_topics;
      logger()->warn("topic {} has fewer than two words in the reference corpus; skipped", t);
      continue;
    }
    double sum = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i < usable.size(); ++i)
      for (std::size_t j = i + 1; j < usable.size(); ++j) {
        const auto cij = counts.pair[pairs.at(detail::pair_key(usable[i], usable[j]))];
        sum += pair_npmi(counts.word[usable[i]], counts.word[usable[j]], cij, counts.windows, params);
        ++n_pairs;
      }
    out.per_topic[t] = sum / static_cast<double>(n_pairs);
    total += *out.per_topic[t];
    ++scored;
  }
  if (out.skipped_words > 0)
    logger()->warn("{} topic words absent from the reference corpus were skipped", out.skipped_words);
  if (scored == 0) throw MetricError("no topic has two or more words present in the reference corpus");
  out.score = total / static_cast<double>(scored);
  return out;
}

/// |union of every topic's first top_k words| / (top_k * num_topics).
inline double topic_diversity(std::span<const std::vector<std::string>> topics, std::size_t top_k = 25) {
  if (topics.empty()) throw MetricError("no topics to score");
  if (top_k < 1) throw ParameterError("top_k must be >= 1");
  std::unordered_set<std::string_view> unique;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    std::unordered_set<std::string_view> own(topics[t].begin(),
                                             topics[t].begin() + static_cast<std::ptrdiff_t>(
                                                                     std::min(top_k, topics[t].size())));
    if (topics[t].size() < top_k || own.size() < top_k)
      throw MetricError("topic " + std::to_string(t) + " has fewer than " + std::to_string(top_k) +
                        " distinct ranked terms");
    unique.insert(own.begin(), own.end());
  }
  return static_cast<double>(unique.size()) / static_cast<double>(top_k * topics.size());
}

}  // namespace layertopic::metrics
