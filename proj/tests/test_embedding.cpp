#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "layertopic/embed_corpus.hpp"
#include "layertopic/embedding.hpp"
#include "layertopic/hsd.hpp"
#include "test_util.hpp"

using namespace layertopic;
using namespace layertopic::embedding;
using testutil::make_doc;
using testutil::random_doc;

TEST(Configs, EighteenDistinctWithDefault) {
  const auto configs = all_configs();
  ASSERT_EQ(configs.size(), 18u);
  std::set<std::string> tags;
  for (const auto& c : configs) tags.insert(c.tag());
  EXPECT_EQ(tags.size(), 18u);
  EXPECT_EQ(kDefaultConfig.aggregation, AggregationMode::LastLayer);
  EXPECT_EQ(kDefaultConfig.pooling, PoolingStrategy::Mean);
}

TEST(Configs, TagRoundTrip) {
  for (const auto& c : all_configs()) {
    const auto back = EmbeddingConfig::parse(c.tag());
    EXPECT_EQ(back.aggregation, c.aggregation);
    EXPECT_EQ(back.pooling, c.pooling);
  }
  EXPECT_THROW(EmbeddingConfig::parse("last_layer"), Error);
  EXPECT_THROW(EmbeddingConfig::parse("bogus/mean"), Error);
}

TEST(Aggregate, TwoLayerToy) {
  const auto doc = make_doc(2, 1, 2, {1, 1, 2, 3});
  EXPECT_EQ(aggregate_layers(doc, AggregationMode::EmbeddingLayer), (MatrixD(1, 2) << 1, 1).finished());
  EXPECT_EQ(aggregate_layers(doc, AggregationMode::SumAllLayers), (MatrixD(1, 2) << 3, 4).finished());
  EXPECT_EQ(aggregate_layers(doc, AggregationMode::LastLayer), (MatrixD(1, 2) << 2, 3).finished());
  EXPECT_EQ(aggregate_layers(doc, AggregationMode::SecondLastLayer), (MatrixD(1, 2) << 1, 1).finished());
}

TEST(Aggregate, ConcatIdenticalRows) {
  std::vector<float> states;
  for (int l = 0; l < 5; ++l) states.insert(states.end(), {1, 0});
  const auto doc = make_doc(5, 1, 2, states);
  const auto out = aggregate_layers(doc, AggregationMode::ConcatLastFour);
  EXPECT_EQ(out, (MatrixD(1, 8) << 1, 0, 1, 0, 1, 0, 1, 0).finished());
}

TEST(Aggregate, ConcatOrderLowToHigh) {
  std::vector<float> states;
  for (int l = 0; l < 6; ++l) states.push_back(static_cast<float>(l));
  const auto doc = make_doc(6, 1, 1, states);
  EXPECT_EQ(aggregate_layers(doc, AggregationMode::ConcatLastFour), (MatrixD(1, 4) << 2, 3, 4, 5).finished());
  EXPECT_EQ(aggregate_layers(doc, AggregationMode::SumLastFour)(0, 0), 14.0);
  EXPECT_EQ(aggregate_layers(doc, AggregationMode::SumAllLayers)(0, 0), 15.0);
}

TEST(Aggregate, TooFewLayersNamesModeAndCount) {
  const auto doc = make_doc(2, 1, 2, {1, 1, 2, 3});
  try {
    aggregate_layers(doc, AggregationMode::SumLastFour);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sum_last_four"), std::string::npos) << msg;
    EXPECT_NE(msg.find('2'), std::string::npos) << msg;
  }
  const auto one = make_doc(1, 1, 1, {1});
  EXPECT_THROW(aggregate_layers(one, AggregationMode::SecondLastLayer), ConfigError);
}

TEST(Pool, ToyExamples) {
  const MatrixD t = (MatrixD(2, 2) << 1, 3, 5, 7).finished();
  EXPECT_EQ(pool(t, PoolingStrategy::Mean), (VectorD(2) << 3, 5).finished());
  EXPECT_EQ(pool(t, PoolingStrategy::Max), (VectorD(2) << 5, 7).finished());
  EXPECT_EQ(pool(t, PoolingStrategy::Cls), (VectorD(2) << 1, 3).finished());
  EXPECT_THROW(pool(MatrixD(0, 2), PoolingStrategy::Mean), InvalidInput);
}

TEST(EmbedDocument, ToyExamples) {
  const auto doc = make_doc(2, 2, 2, {0, 0, 0, 0, 1, 3, 5, 7});
  const VectorF a = embed_document(doc, {AggregationMode::LastLayer, PoolingStrategy::Mean});
  EXPECT_EQ(a, (VectorF(2) << 3, 5).finished());
  const VectorF b = embed_document(doc, {AggregationMode::SumAllLayers, PoolingStrategy::Cls});
  EXPECT_EQ(b, (VectorF(2) << 1, 3).finished());
}

TEST(EmbedDocument, AggregationPrecedesPoolingForMax) {
  // Layer maxima sit on different tokens, so max(sum) < sum(max).
  const auto doc = make_doc(2, 2, 1, {1, 0, 0, 1});
  const VectorF v = embed_document(doc, {AggregationMode::SumAllLayers, PoolingStrategy::Max});
  EXPECT_EQ(v[0], 1.0f);
}

TEST(EmbedDocument, SumLastFourMeanLinearity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto doc = random_doc(rng, 7, 1 + rng() % 20, 1 + rng() % 12);
    const VectorF got = embed_document(doc, {AggregationMode::SumLastFour, PoolingStrategy::Mean});
    VectorD oracle = VectorD::Zero(static_cast<Eigen::Index>(doc.hidden_dim));
    for (std::size_t l = 3; l < 7; ++l) oracle += doc.layer(l).cast<double>().colwise().mean().transpose();
    for (Eigen::Index k = 0; k < oracle.size(); ++k)
      EXPECT_NEAR(got[k], oracle[k], 1e-5 * std::max(1.0, std::abs(oracle[k])));
  }
}

// Properties over randomized docs.
class EmbeddingProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};
  HiddenStateDoc next() {
    return random_doc(rng, 5 + rng() % 9, 1 + rng() % 32, 1 + rng() % 16);
  }
};

TEST_F(EmbeddingProperties, ClsCommutesWithAggregation) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto doc = next();
    HiddenStateDoc cls = doc;
    cls.num_tokens = 1;
    cls.states.clear();
    for (std::size_t l = 0; l < doc.num_layer_slices; ++l) {
      const auto row = doc.token(l, 0);
      cls.states.insert(cls.states.end(), row.begin(), row.end());
    }
    for (auto mode : kAggregationModes) {
      const VectorF got = embed_document(doc, {mode, PoolingStrategy::Cls});
      const VectorD expect = aggregate_layers(cls, mode).row(0).transpose();
      EXPECT_EQ(got, expect.cast<float>()) << to_string(mode);
    }
  }
}

TEST_F(EmbeddingProperties, MaxDominatesMean) {
  for (int trial = 0; trial < 100; ++trial) {
    const auto doc = next();
    for (auto mode : kAggregationModes) {
      const MatrixD tokens = aggregate_layers(doc, mode);
      const VectorD mx = pool(tokens, PoolingStrategy::Max), mean = pool(tokens, PoolingStrategy::Mean);
      for (Eigen::Index k = 0; k < mx.size(); ++k) EXPECT_GE(mx[k], mean[k] - 1e-12);
    }
  }
}

TEST_F(EmbeddingProperties, PermutationInvariance) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto doc = next();
    const MatrixD tokens = aggregate_layers(doc, AggregationMode::SumAllLayers);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(tokens.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin() + 1, perm.end(), rng);  // fixes row 0
    MatrixD shuffled(tokens.rows(), tokens.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.row(static_cast<Eigen::Index>(i)) = tokens.row(perm[i]);
    EXPECT_TRUE(pool(shuffled, PoolingStrategy::Max) == pool(tokens, PoolingStrategy::Max));
    EXPECT_TRUE(pool(shuffled, PoolingStrategy::Cls) == pool(tokens, PoolingStrategy::Cls));
    const VectorD a = pool(shuffled, PoolingStrategy::Mean), b = pool(tokens, PoolingStrategy::Mean);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(EmbeddingProperties, ShapeLaw) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto doc = next();
    for (const auto& c : all_configs()) {
      const auto v = embed_document(doc, c);
      const std::size_t want = c.aggregation == AggregationMode::ConcatLastFour ? 4 * doc.hidden_dim : doc.hidden_dim;
      EXPECT_EQ(static_cast<std::size_t>(v.size()), want);
      EXPECT_EQ(output_width(c.aggregation, doc.hidden_dim), want);
    }
  }
}

// ---------------------------------------------------------------------------
// HSD1 dumps

namespace {

std::vector<HiddenStateDoc> write_dump(const std::filesystem::path& path, std::size_t n, std::size_t slices,
                                       std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<HiddenStateDoc> docs;
  hsd::Writer w(path, static_cast<std::uint32_t>(n), static_cast<std::uint16_t>(slices),
                static_cast<std::uint16_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back(random_doc(rng, slices, 1 + rng() % 10, dim, i));
    w.write(docs.back());
  }
  w.close();
  return docs;
}

}  // namespace

TEST(Hsd, RoundTripIsBitExact) {
  testutil::TempDir dir;
  const auto docs = write_dump(dir / "a.hsd", 7, 3, 4, 1);
  hsd::Reader r(dir / "a.hsd");
  EXPECT_EQ(r.header().num_docs, 7u);
  EXPECT_EQ(r.header().num_layer_slices, 3u);
  EXPECT_EQ(r.header().hidden_dim, 4u);
  for (const auto& d : docs) {
    auto got = r.next();
    ASSERT_TRUE(got);
    EXPECT_EQ(got->doc_id, d.doc_id);
    EXPECT_EQ(got->num_tokens, d.num_tokens);
    ASSERT_EQ(got->states.size(), d.states.size());
    EXPECT_EQ(std::memcmp(got->states.data(), d.states.data(), d.states.size() * 4), 0);
  }
  EXPECT_FALSE(r.next());
}

TEST(Hsd, HeaderLayoutIsLittleEndian) {
  testutil::TempDir dir;
  write_dump(dir / "a.hsd", 1, 2, 3, 1);
  std::ifstream in(dir / "a.hsd", std::ios::binary);
  unsigned char h[16];
  in.read(reinterpret_cast<char*>(h), 16);
  EXPECT_EQ(std::string(reinterpret_cast<char*>(h), 4), "HSD1");
  EXPECT_EQ(h[4], 1);   // version
  EXPECT_EQ(h[8], 1);   // num_docs
  EXPECT_EQ(h[12], 2);  // slices
  EXPECT_EQ(h[14], 3);  // dim
}

TEST(Hsd, TruncatedRecordReportsDocIndex) {
  testutil::TempDir dir;
  write_dump(dir / "a.hsd", 5, 2, 3, 1);
  const auto size = std::filesystem::file_size(dir / "a.hsd");
  std::filesystem::resize_file(dir / "a.hsd", size - 5);
  hsd::Reader r(dir / "a.hsd");
  for (int i = 0; i < 4; ++i) ASSERT_TRUE(r.next());
  try {
    r.next();
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_EQ(e.doc_index(), 4u);
  }
}

TEST(Hsd, BadMagicAndMissingFile) {
  testutil::TempDir dir;
  {
    std::ofstream out(dir / "bad.hsd", std::ios::binary);
    out << "NOPE0000000000000000";
  }
  EXPECT_THROW(hsd::Reader(dir / "bad.hsd"), IoError);
  EXPECT_THROW(hsd::Reader(dir / "missing.hsd"), IoError);
}

TEST(Hsd, WriterChecksDeclaredCount) {
  testutil::TempDir dir;
  hsd::Writer w(dir / "a.hsd", 2, 1, 1);
  w.write(make_doc(1, 1, 1, {1}));
  EXPECT_THROW(w.close(), IoError);
}

TEST(EmbedCorpus, StacksLastLayerClsRows) {
  testutil::TempDir dir;
  const auto docs = write_dump(dir / "a.hsd", 3, 3, 4, 5);
  const auto m = embed_corpus(dir / "a.hsd", {AggregationMode::LastLayer, PoolingStrategy::Cls});
  ASSERT_EQ(m.num_docs(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_EQ(m.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), docs[i].token(2, 0)[k]);
}

TEST(EmbedCorpus, ConcatWidth) {
  testutil::TempDir dir;
  write_dump(dir / "a.hsd", 4, 6, 5, 5);
  const auto m = embed_corpus(dir / "a.hsd", {AggregationMode::ConcatLastFour, PoolingStrategy::Max});
  EXPECT_EQ(m.data.cols(), 20);
}

TEST(EmbedCorpus, WorkerCountDoesNotChangeBytes) {
  testutil::TempDir dir;
  write_dump(dir / "a.hsd", 100, 6, 8, 9);
  for (const auto& c : all_configs()) {
    EmbedOptions one, many;
    many.workers = 4;
    many.batch_size = 7;
    const auto a = embed_corpus(dir / "a.hsd", c, one);
    const auto b = embed_corpus(dir / "a.hsd", c, many);
    ASSERT_EQ(a.data.size(), b.data.size());
    EXPECT_EQ(std::memcmp(a.data.data(), b.data.data(), sizeof(float) * a.data.size()), 0) << c.tag();
    EXPECT_EQ(a.doc_ids, b.doc_ids);
  }
}

TEST(EmbedCorpus, RowsFollowDocIdOrder) {
  testutil::TempDir dir;
  std::mt19937_64 rng(3);
  hsd::Writer w(dir / "a.hsd", 3, 1, 2);
  for (std::uint64_t id : {2, 0, 1}) w.write(random_doc(rng, 1, 2, 2, id));
  w.close();
  const auto m = embed_corpus(dir / "a.hsd", kDefaultConfig);
  EXPECT_EQ(m.doc_ids, (std::vector<std::uint64_t>{0, 1, 2}));
}

TEST(EmbedCorpus, Emb1RoundTrip) {
  testutil::TempDir dir;
  write_dump(dir / "a.hsd", 5, 5, 3, 4);
  const EmbeddingConfig c{AggregationMode::SumLastFour, PoolingStrategy::Max};
  const auto m = embed_corpus(dir / "a.hsd", c);
  write_embeddings(dir / "a.emb", m);
  const auto back = read_embeddings(dir / "a.emb");
  EXPECT_EQ(back.data, m.data);
  EXPECT_EQ(back.config.tag(), c.tag());
  std::ifstream in(dir / "a.emb", std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "EMB1");
}
