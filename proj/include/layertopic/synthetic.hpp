#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/corpus.hpp"
#include "layertopic/hsd.hpp"
#include "layertopic/seed.hpp"

// Constructed three-theme corpus with matching hidden-state dumps. Word
// vectors carry a theme direction; deeper layers add document context, so
// the last layers separate themes most cleanly. The CLS row is a noisier summary.
namespace layertopic::synthetic {

namespace fs = std::filesystem;

inline const std::array<std::array<const char*, 20>, 3> kThemeWords{{
    {"planet", "orbit", "rocket", "galaxy", "comet", "telescope", "astronaut", "nebula", "asteroid",
     "satellite", "lunar", "solar", "cosmos", "meteor", "launch", "spacecraft", "gravity", "eclipse",
     "stellar", "observatory"},
    {"football", "goal", "striker", "referee", "stadium", "league", "coach", "penalty", "tournament",
     "goalkeeper", "midfield", "season", "trophy", "match", "defender", "fans", "kickoff", "champion",
     "transfer", "squad"},
    {"recipe", "oven", "flour", "butter", "garlic", "simmer", "sauce", "baking", "onion", "pepper",
     "skillet", "dough", "roast", "spice", "kitchen", "chef", "tomato", "noodles", "broth", "dessert"},
}};

inline const std::array<const char*, 5> kFillerWords{"the", "and", "of", "to", "in"};

struct FixtureParams {
  std::size_t num_docs = 90;
  std::size_t words_per_doc = 24;
  std::size_t fillers_per_doc = 3;  // about 10% of tokens
  std::size_t layers = 4;           // encoder layers; slices = layers + 1
  std::size_t dim = 16;
  int first_year = 2009;
  int last_year = 2021;
  std::uint64_t seed = 20240229;
};

struct Fixture {
  std::vector<corpus::Document> docs;
  std::vector<std::size_t> themes;  // theme of each document
  FixtureParams params;
};

namespace detail {

// Distribution code is spelled out so fixtures are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace detail

inline Fixture make_fixture(const FixtureParams& params = {}) {
  Fixture fx;
  fx.params = params;
  detail::Rng rng(params.seed);
  const std::size_t span_years = static_cast<std::size_t>(params.last_year - params.first_year + 1);
  for (std::size_t i = 0; i < params.num_docs; ++i) {
    const std::size_t theme = i % 3;
    std::vector<std::string> words;
    for (std::size_t w = 0; w < params.words_per_doc; ++w) words.push_back(kThemeWords[theme][rng.below(20)]);
    for (std::size_t f = 0; f < params.fillers_per_doc; ++f)
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)),
                   kFillerWords[rng.below(kFillerWords.size())]);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    corpus::Document doc;
    doc.doc_id = i;
    doc.raw_text = std::move(text);
    doc.timestamp = params.first_year + static_cast<std::int64_t>(i * span_years / params.num_docs);
    fx.docs.push_back(std::move(doc));
    fx.themes.push_back(theme);
  }
  return fx;
}

/// Hidden states for one document's tokens (whitespace split, so the dump
/// lines up with the text it was built from). Row 0 is a CLS row.
inline embedding::HiddenStateDoc hidden_states(const Fixture& fx, std::size_t doc_index,
                                               const std::string& text) {
  const auto& p = fx.params;
  const std::size_t theme = fx.themes[doc_index];
  std::vector<std::string> tokens;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto end = std::min(text.find(' ', pos), text.size());
    if (end > pos) tokens.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }

  // Word vectors depend only on the word, so they are shared across documents.
  auto word_vector = [&](const std::string& word) {
    detail::Rng wr(p.seed ^ harness::fnv1a(word));
    std::vector<double> v(p.dim);
    for (auto& x : v) x = 0.6 * wr.normal();
    for (std::size_t t = 0; t < 3; ++t)
      for (const char* w : kThemeWords[t])
        if (word == w) v[t] += 3.0;
    for (const char* w : kFillerWords)
      if (word == w) v[3] += 3.0;
    return v;
  };

  detail::Rng rng(p.seed + 7919 * (doc_index + 1));
  embedding::HiddenStateDoc doc;
  doc.doc_id = fx.docs[doc_index].doc_id;
  doc.num_layer_slices = p.layers + 1;
  doc.num_tokens = tokens.size() + 1;
  doc.hidden_dim = p.dim;
  doc.states.assign(doc.num_layer_slices * doc.num_tokens * p.dim, 0.0f);
  std::vector<std::vector<double>> base;
  for (const auto& t : tokens) base.push_back(word_vector(t));
  for (std::size_t l = 0; l < doc.num_layer_slices; ++l) {
    const double depth = static_cast<double>(l) / static_cast<double>(p.layers);
    for (std::size_t t = 0; t < doc.num_tokens; ++t) {
      float* row = doc.states.data() + (l * doc.num_tokens + t) * p.dim;
      for (std::size_t k = 0; k < p.dim; ++k) {
        double v;
        if (t == 0) {
          // CLS: a theme summary that sharpens with depth, noisier than the token rows
          v = 0.7 * rng.normal() + (k == theme ? 1.8 + 1.5 * depth : 0.0) + (k == 4 ? 2.0 : 0.0);
        } else {
          v = base[t - 1][k] * (1.0 - 0.4 * depth) + 0.15 * rng.normal();
          if (k == theme) v += 2.5 * depth;  // document context
        }
        row[k] = static_cast<float>(v);
      }
    }
  }
  return doc;
}

/// Writes corpus.csv (id,text,year), with.hsd, without.hsd and a default
/// grid.json referencing them into `dir`.
inline void write_fixture(const fs::path& dir, const Fixture& fx, const fs::path& stoplist_path) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "corpus.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "corpus.csv").string());
    out << "id,text,year\n";
    for (const auto& d : fx.docs) out << d.doc_id << ",\"" << d.raw_text << "\"," << *d.timestamp << '\n';
  }
  const auto stoplist = corpus::StopList::load(stoplist_path);
  for (bool with : {true, false}) {
    hsd::Writer writer(dir / (with ? "with.hsd" : "without.hsd"), static_cast<std::uint32_t>(fx.docs.size()),
                       static_cast<std::uint16_t>(fx.params.layers + 1),
                       static_cast<std::uint16_t>(fx.params.dim));
    for (std::size_t i = 0; i < fx.docs.size(); ++i) {
      const auto text = with ? fx.docs[i].raw_text : corpus::remove_stopwords(fx.docs[i].raw_text, stoplist);
      writer.write(hidden_states(fx, i, text));
    }
    writer.close();
  }
  nlohmann::json grid{
      {"datasets",
       {{{"id", "fixture"},
         {"corpus", "corpus.csv"},
         {"time_column", "year"},
         {"dump_with", "with.hsd"},
         {"dump_without", "without.hsd"},
         {"stopwords", fs::absolute(stoplist_path).string()}}}},
      {"configs", "all"},
      {"nr_topics", {10, 20, 30, 40, 50}},
      {"runs_per_cell", 3},
      {"base_seed", 42},
      {"arms", {"with", "without"}}};
  std::ofstream out(dir / "grid.json", std::ios::trunc);
  out << grid.dump(2) << '\n';
}

}  // namespace layertopic::synthetic
