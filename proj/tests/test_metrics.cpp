#include <gtest/gtest.h>

#include <random>

#include "layertopic/metrics.hpp"
#include "oracles.hpp"

using namespace layertopic;
using namespace layertopic::metrics;

using oracle::Docs;
using oracle::random_corpus;
using oracle::random_topics;

TEST(Npmi, PerfectCooccurrenceIsOne) {
  const Docs ref{{"a", "b"}, {"b", "a"}, {"c"}, {"c"}};
  EXPECT_EQ(npmi_coherence(Docs{{"a", "b"}}, ref).score, 1.0);
}

TEST(Npmi, IndependentWordsScoreZero) {
  // P(a) = P(b) = 1/2, P(a,b) = 1/4
  const Docs ref{{"a", "b"}, {"a", "x"}, {"x", "b"}, {"x"}};
  EXPECT_NEAR(npmi_coherence(Docs{{"a", "b"}}, ref).score, 0.0, 1e-15);
}

TEST(Npmi, NeverCooccurringIsMinusOne) {
  const Docs ref{{"a"}, {"b"}};
  EXPECT_EQ(npmi_coherence(Docs{{"a", "b"}}, ref).score, -1.0);
  MetricParams eps;
  eps.zero_rule = ZeroCooccurrence::Epsilon;
  const double s = npmi_coherence(Docs{{"a", "b"}}, ref, eps).score;
  EXPECT_GE(s, -1.0);
  EXPECT_LE(s, 1.0);
  EXPECT_LT(s, 0.0);
}

TEST(Npmi, WordsInEveryWindowScoreOne) {
  const Docs ref{{"a", "b"}, {"a", "b", "c"}};
  EXPECT_EQ(npmi_coherence(Docs{{"a", "b"}}, ref).score, 1.0);
}

TEST(Npmi, SixDocumentToyCorpus) {
  const Docs ref{{"cat", "dog", "fish", "cat", "bird"},
                 {"dog", "cat"},
                 {"fish", "water", "boat", "fish"},
                 {"bird", "sky", "cat", "dog", "sky", "water"},
                 {},
                 {"boat", "water", "fish", "dog"}};
  const Docs topics{{"cat", "dog", "bird"}, {"fish", "water", "boat", "sky"}};
  MetricParams p;
  p.window = 3;
  const double got = npmi_coherence(topics, ref, p).score;
  EXPECT_NEAR(got, oracle::npmi(topics, ref, 3, 10), 1e-12);
  // 3 + 1 + 2 + 4 + 0 + 2 windows
  std::unordered_map<std::string_view, std::uint32_t> t{{"cat", 0}};
  EXPECT_EQ(count_windows(ref, t, {}, 3).windows, 12u);
}

TEST(Npmi, MatchesBruteForceOnRandomCorpora) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t vocab = 6 + trial % 20;
    const Docs ref = random_corpus(rng, 1 + static_cast<std::size_t>(trial) % 50, vocab);
    const Docs topics = random_topics(rng, 1 + trial % 5, 2 + static_cast<std::size_t>(trial) % 8, vocab);
    MetricParams p;
    p.window = 1 + static_cast<std::size_t>(trial) % 12;
    p.coherence_top_n = 2 + static_cast<std::size_t>(trial) % 9;
    double got = 0;
    try {
      got = npmi_coherence(topics, ref, p).score;
    } catch (const MetricError&) {
      continue;  // no topic had two usable words
    }
    ASSERT_NEAR(got, oracle::npmi(topics, ref, p.window, p.coherence_top_n), 1e-12) << "trial " << trial;
    ASSERT_GE(got, -1.0);
    ASSERT_LE(got, 1.0);
  }
}

TEST(Npmi, WordOrderWithinTopicIrrelevant) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Docs ref = random_corpus(rng, 20, 10);
    Docs topics = random_topics(rng, 3, 6, 10);
    double a = 0;
    try {
      a = npmi_coherence(topics, ref).score;
    } catch (const MetricError&) {
      continue;
    }
    for (auto& t : topics) std::shuffle(t.begin(), t.end(), rng);
    EXPECT_NEAR(npmi_coherence(topics, ref).score, a, 1e-12);
  }
}

TEST(Npmi, WorkerCountDoesNotChangeScore) {
  std::mt19937_64 rng(4);
  const Docs ref = random_corpus(rng, 300, 15);
  const Docs topics = random_topics(rng, 4, 8, 15);
  const double one = npmi_coherence(topics, ref, {}, 1).score;
  EXPECT_EQ(npmi_coherence(topics, ref, {}, 4).score, one);
}

TEST(Npmi, AbsentWordsAreSkipped) {
  const Docs ref{{"a", "b"}, {"a"}};
  const auto r = npmi_coherence(Docs{{"a", "zzz", "b"}, {"zzz", "a"}}, ref);
  EXPECT_EQ(r.skipped_words, 2u);
  EXPECT_EQ(r.skipped_topics, 1u);
  EXPECT_FALSE(r.per_topic[1].has_value());
}

TEST(Npmi, Errors) {
  EXPECT_THROW(npmi_coherence(Docs{{"a", "b"}}, Docs{}), InvalidInput);
  EXPECT_THROW(npmi_coherence(Docs{{"a", "b"}}, Docs{{}, {}}), InvalidInput);
  EXPECT_THROW(npmi_coherence(Docs{{"x", "y"}}, Docs{{"a"}}), MetricError);
  MetricParams p;
  p.window = 0;
  EXPECT_THROW(npmi_coherence(Docs{{"a", "b"}}, Docs{{"a"}}, p), ParameterError);
}

TEST(Diversity, DisjointIsOne) {
  EXPECT_EQ(topic_diversity(Docs{{"a", "b"}, {"c", "d"}, {"e", "f"}}, 2), 1.0);
}

TEST(Diversity, IdenticalIsOneOverT) {
  EXPECT_DOUBLE_EQ(topic_diversity(Docs{{"a", "b"}, {"a", "b"}, {"a", "b"}, {"b", "a"}}, 2), 0.25);
}

TEST(Diversity, OverlappingChain) {
  EXPECT_DOUBLE_EQ(topic_diversity(Docs{{"a", "b"}, {"b", "c"}, {"c", "d"}}, 2), 4.0 / 6.0);
}

TEST(Diversity, UsesOnlyFirstTopK) {
  EXPECT_EQ(topic_diversity(Docs{{"a", "b", "z"}, {"c", "d", "z"}}, 2), 1.0);
}

TEST(Diversity, BoundsAndOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + static_cast<std::size_t>(trial) % 6;
    const Docs topics = random_topics(rng, 1 + trial % 7, k + 2, 12);
    const double d = topic_diversity(topics, k);
    ASSERT_EQ(d, oracle::diversity(topics, k));
    ASSERT_GE(d, 1.0 / static_cast<double>(topics.size()));
    ASSERT_LE(d, 1.0);
  }
}

TEST(Diversity, Errors) {
  EXPECT_THROW(topic_diversity(Docs{}, 2), MetricError);
  EXPECT_THROW(topic_diversity(Docs{{"a", "b"}, {"c"}}, 2), MetricError);
  EXPECT_THROW(topic_diversity(Docs{{"a", "a"}}, 2), MetricError);
  EXPECT_THROW(topic_diversity(Docs{{"a"}}, 0), ParameterError);
}
