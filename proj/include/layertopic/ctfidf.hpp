#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "layertopic/corpus.hpp"
#include "layertopic/error.hpp"
#include "layertopic/matrix.hpp"

namespace layertopic::topic {

/// Raw term counts of each class (documents concatenated per label).
/// Labels < 0 are noise and ignored; `num_classes` rows are produced.
inline MatrixD class_term_counts(const corpus::DocTermCounts& doc_term, std::span<const int> labels,
                                 std::size_t num_classes) {
  if (labels.size() != doc_term.num_docs())
    throw InvalidInput("label count does not match document count");
  MatrixD counts = MatrixD::Zero(static_cast<Eigen::Index>(num_classes),
                                 static_cast<Eigen::Index>(doc_term.vocab_size()));
  for (std::size_t d = 0; d < labels.size(); ++d) {
    if (labels[d] < 0) continue;
    const auto c = static_cast<Eigen::Index>(labels[d]);
    for (const auto& [term, count] : doc_term.rows[d]) counts(c, term) += count;
  }
  return counts;
}

/// W(t,c) = tf(t,c) * log(1 + A / f(t)), with A the mean token count over the
/// first `active_classes` classes (defaults to all rows) and f(t) the total
/// count of t over every class.
inline MatrixD ctfidf_from_counts(const MatrixD& counts, std::size_t active_classes = 0) {
  if (active_classes == 0) active_classes = static_cast<std::size_t>(counts.rows());
  MatrixD weights = MatrixD::Zero(counts.rows(), counts.cols());
  if (active_classes == 0) return weights;
  const double avg_tokens = counts.sum() / static_cast<double>(active_classes);
  const Eigen::RowVectorXd totals = counts.colwise().sum();
  for (Eigen::Index t = 0; t < counts.cols(); ++t) {
    if (totals[t] <= 0) continue;
    const double idf = std::log(1.0 + avg_tokens / totals[t]);
    weights.col(t) = counts.col(t) * idf;
  }
  return weights;
}

/// c-TF-IDF topic-term matrix for labels 0..K-1 (K = max label + 1).
inline MatrixD ctfidf(const corpus::DocTermCounts& doc_term, std::span<const int> labels) {
  int top = -1;
  for (int l : labels) top = std::max(top, l);
  if (top < 0) throw ModelError("no topics found");
  return ctfidf_from_counts(class_term_counts(doc_term, labels, static_cast<std::size_t>(top + 1)));
}

struct TopicWord {
  std::string term;
  double score = 0.0;

  friend bool operator==(const TopicWord&, const TopicWord&) = default;
};

struct RankedTopic {
  std::vector<TopicWord> words;
  /// The row was all zero; words are the lexicographically first terms.
  bool degenerate = false;
};

/// The n highest-weight terms per topic, descending, ties broken lexicographically.
/// `vocab` must be sorted (as DocTermCounts guarantees).
inline std::vector<RankedTopic> top_words(const MatrixD& topic_term,
                                          std::span<const std::string> vocab, std::size_t n = 10) {
  if (static_cast<std::size_t>(topic_term.cols()) != vocab.size())
    throw InvalidInput("topic-term width does not match the vocabulary");
  if (n > vocab.size())
    throw ParameterError("requested " + std::to_string(n) + " top words from a vocabulary of " +
                         std::to_string(vocab.size()));
  std::vector<RankedTopic> out(static_cast<std::size_t>(topic_term.rows()));
  std::vector<std::uint32_t> order(vocab.size());
  for (Eigen::Index k = 0; k < topic_term.rows(); ++k) {
    const auto row = topic_term.row(k);
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        if (row[a] != row[b]) return row[a] > row[b];
                        return vocab[a] < vocab[b];
                      });
    auto& ranked = out[static_cast<std::size_t>(k)];
    ranked.degenerate = (row.array() == 0.0).all();
    for (std::size_t i = 0; i < n; ++i) ranked.words.push_back({vocab[order[i]], row[order[i]]});
  }
  return out;
}

inline std::vector<std::vector<std::string>> word_lists(std::span<const RankedTopic> topics) {
  std::vector<std::vector<std::string>> out;
  out.reserve(topics.size());
  for (const auto& t : topics) {
    auto& words = out.emplace_back();
    for (const auto& w : t.words) words.push_back(w.term);
  }
  return out;
}

}  // namespace layertopic::topic
