#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>
#include <set>

#include "layertopic/corpus.hpp"
#include "layertopic/experiment.hpp"
#include "test_util.hpp"

using namespace layertopic;
using namespace layertopic::corpus;

namespace {

StopList stoplist_of(std::initializer_list<const char*> words) {
  std::unordered_set<std::string> set;
  for (auto w : words) set.insert(w);
  return {set, "inline"};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize("Great—WALL 2x"), (std::vector<std::string>{"great", "wall", "2x"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("a I x").empty());
  EXPECT_EQ(tokenize("don't stop"), (std::vector<std::string>{"don", "stop"}));
  EXPECT_EQ(tokenize("Über CAFÉ ΑΘΗΝΑ"), (std::vector<std::string>{"über", "café", "αθηνα"}));
}

TEST(StopWords, Examples) {
  EXPECT_EQ(remove_stopwords("the great wall", stoplist_of({"the"})), "great wall");
  EXPECT_EQ(remove_stopwords("THE The the", stoplist_of({"the"})), "");
  const auto english = StopList::load(harness::default_stoplist());
  EXPECT_EQ(remove_stopwords("peace and security", english), "peace security");
}

TEST(StopWords, BundledListIsPinned) {
  const auto english = StopList::load(harness::default_stoplist());
  EXPECT_EQ(english.size(), 179u);
  for (const char* w : {"the", "and", "of", "wouldn't", "ourselves", "y"}) EXPECT_TRUE(english.contains(w)) << w;
  EXPECT_FALSE(english.contains("peace"));
}

TEST(StopWords, LoadHandlesCommentsAndCase) {
  testutil::TempDir dir;
  write_file(dir / "s.txt", "# header\nThe\n\n  AND  # trailing\n");
  const auto s = StopList::load(dir / "s.txt");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.contains("the"));
  EXPECT_TRUE(s.contains("and"));
}

TEST(StopWords, IdempotentAndShrinksVocabulary) {
  const auto english = StopList::load(harness::default_stoplist());
  std::mt19937_64 rng(4);
  const std::vector<std::string> pool{"the", "peace", "And", "war", "of", "Security", "council", "is", "we"};
  std::vector<std::vector<std::string>> with, without;
  for (int d = 0; d < 40; ++d) {
    std::string text;
    for (int w = 0; w < 12; ++w) text += pool[rng() % pool.size()] + " ";
    const auto once = remove_stopwords(text, english);
    EXPECT_EQ(remove_stopwords(once, english), once);
    with.push_back(tokenize(text));
    without.push_back(tokenize(once));
  }
  EXPECT_LE(build_doc_term(without, 1).vocab_size(), build_doc_term(with, 1).vocab_size());
}

TEST(DocTerm, Counts) {
  const std::vector<std::vector<std::string>> docs{{"a", "b"}, {"b", "c"}};
  const auto dt = build_doc_term(docs, 1);
  EXPECT_EQ(dt.vocab, (std::vector<std::string>{"a", "b", "c"}));
  using Row = std::vector<std::pair<std::uint32_t, std::uint32_t>>;
  EXPECT_EQ(dt.rows[0], (Row{{0, 1}, {1, 1}}));
  EXPECT_EQ(dt.rows[1], (Row{{1, 1}, {2, 1}}));
  EXPECT_EQ(build_doc_term(docs, 2).vocab, (std::vector<std::string>{"b"}));
  EXPECT_THROW(build_doc_term(docs, 3), ConfigError);
}

TEST(DocTerm, RecountOracle) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<std::string>> docs(1 + rng() % 30);
    for (auto& d : docs)
      for (std::size_t i = rng() % 15; i > 0; --i) d.push_back("w" + std::to_string(rng() % 25));
    docs[0].push_back("w0");
    const std::size_t min_df = 1 + rng() % 2;
    std::map<std::string, std::set<std::size_t>> df;
    for (std::size_t d = 0; d < docs.size(); ++d)
      for (const auto& t : docs[d]) df[t].insert(d);
    std::size_t expected = 0;
    for (const auto& [t, s] : df) expected += s.size() >= min_df;
    if (expected == 0) continue;
    const auto dt = build_doc_term(docs, min_df);
    EXPECT_EQ(dt.vocab_size(), expected);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      std::size_t kept = 0, total = 0;
      for (const auto& t : docs[d]) kept += dt.index_of(t).has_value();
      for (const auto& [term, c] : dt.rows[d]) total += c;
      EXPECT_EQ(total, kept);  // conservation after filtering
    }
  }
}

TEST(LoadCorpus, BasicCsv) {
  testutil::TempDir dir;
  write_file(dir / "c.csv", "id,text\n1,hello world\n2,\"quoted, with comma\"\n3,third\n");
  const auto docs = load_corpus(dir / "c.csv", {});
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].doc_id, 0u);
  EXPECT_EQ(docs[2].doc_id, 2u);
  EXPECT_EQ(docs[1].raw_text, "quoted, with comma");
  EXPECT_FALSE(docs[0].timestamp);
}

TEST(LoadCorpus, YearColumnAndQuotes) {
  testutil::TempDir dir;
  std::string content = "text,year\r\n";
  for (int y = 2006; y <= 2015; ++y) content += "\"say \"\"hi\"\"\r\nagain\"," + std::to_string(y) + "\r\n";
  write_file(dir / "c.csv", content);
  CorpusSchema schema;
  schema.time_column = "year";
  const auto docs = load_corpus(dir / "c.csv", schema);
  ASSERT_EQ(docs.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(*docs[static_cast<std::size_t>(i)].timestamp, 2006 + i);
  EXPECT_EQ(docs[0].raw_text, "say \"hi\"\r\nagain");
}

TEST(LoadCorpus, EmptyTextKept) {
  testutil::TempDir dir;
  write_file(dir / "c.csv", "text\nfirst\n\"\"\nthird\n");
  const auto docs = load_corpus(dir / "c.csv", {});
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[1].raw_text, "");
}

TEST(LoadCorpus, Errors) {
  testutil::TempDir dir;
  write_file(dir / "c.csv", "body,year\nx,2001\ny,20x1\n");
  EXPECT_THROW(load_corpus(dir / "c.csv", {}), SchemaError);
  CorpusSchema schema;
  schema.text_column = "body";
  schema.time_column = "year";
  try {
    load_corpus(dir / "c.csv", schema);
    FAIL() << "expected RecordError";
  } catch (const RecordError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  schema.time_column = "when";
  EXPECT_THROW(load_corpus(dir / "c.csv", schema), SchemaError);
  EXPECT_THROW(load_corpus(dir / "missing.csv", {}), IoError);
}

TEST(LoadCorpus, TsvAndJsonLines) {
  testutil::TempDir dir;
  write_file(dir / "c.tsv", "text\tdate\nalpha\t2016-03-01\n");
  CorpusSchema schema;
  schema.delimiter = '\t';
  schema.time_column = "date";
  const auto tsv = load_corpus(dir / "c.tsv", schema);
  ASSERT_EQ(tsv.size(), 1u);
  EXPECT_EQ(*tsv[0].timestamp, 16861);  // days since 1970-01-01

  write_file(dir / "c.jsonl", "{\"text\":\"one\",\"year\":2001}\n\n{\"text\":\"two\",\"year\":\"2002\"}\n");
  CorpusSchema js;
  js.time_column = "year";
  const auto lines = load_corpus(dir / "c.jsonl", js);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[1].raw_text, "two");
  EXPECT_EQ(*lines[1].timestamp, 2002);
}
