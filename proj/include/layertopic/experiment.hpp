#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "layertopic/corpus.hpp"
#include "layertopic/embed_corpus.hpp"
#include "layertopic/error.hpp"
#include "layertopic/log.hpp"
#include "layertopic/metrics.hpp"
#include "layertopic/records.hpp"
#include "layertopic/seed.hpp"
#include "layertopic/topic_model.hpp"

#ifndef LAYERTOPIC_DEFAULT_STOPLIST
#define LAYERTOPIC_DEFAULT_STOPLIST "data/stopwords_en.txt"
#endif

namespace layertopic::harness {

namespace fs = std::filesystem;

inline fs::path default_stoplist() { return LAYERTOPIC_DEFAULT_STOPLIST; }

struct DatasetSpec {
  std::string id;
  fs::path corpus;
  corpus::CorpusSchema schema;
  std::optional<fs::path> dump_with;     // hidden states of the raw text
  std::optional<fs::path> dump_without;  // hidden states of the stop-word-free text
  fs::path stopwords = default_stoplist();

  const fs::path& dump_for(Arm arm) const {
    const auto& dump = arm == Arm::With ? dump_with : dump_without;
    if (!dump)
      throw ConfigError("dataset '" + id + "' has no dump configured for the '" +
                        std::string(to_string(arm)) + "' arm");
    return *dump;
  }
};

struct PipelineSettings {
  reducer::ReducerParams reducer;
  cluster::ClusterParams cluster;
  metrics::MetricParams metrics;
  std::size_t top_n = 10;
  std::size_t min_df = 1;
};

enum class GridMode { Static, Dtm };

struct GridSpec {
  std::vector<DatasetSpec> datasets;
  std::vector<embedding::EmbeddingConfig> configs = embedding::all_configs();
  std::vector<std::size_t> nr_topics_list{10, 20, 30, 40, 50};
  std::size_t runs_per_cell = 3;
  std::uint64_t base_seed = 42;
  GridMode mode = GridMode::Static;
  std::size_t dtm_bins = 9;
  topic::Binning dtm_binning = topic::Binning::EqualWidth;
  std::vector<Arm> arms{Arm::With};
  PipelineSettings pipeline;
  /// Concurrent grid cells; every cell is single-threaded internally.
  unsigned workers = 1;
  /// Stop after this many newly executed runs (used to exercise resume).
  std::optional<std::size_t> max_runs;

  void validate() const {
    if (datasets.empty()) throw ConfigError("grid spec lists no datasets");
    if (configs.empty()) throw ConfigError("grid spec lists no embedding configs");
    if (nr_topics_list.empty()) throw ConfigError("grid spec lists no topic counts");
    if (arms.empty()) throw ConfigError("grid spec lists no stop-word arms");
    if (runs_per_cell < 1) throw ConfigError("runs_per_cell must be >= 1");
    if (mode == GridMode::Dtm && dtm_bins < 1) throw ConfigError("dtm_bins must be >= 1");
    for (auto k : nr_topics_list)
      if (k < 1) throw ConfigError("topic counts must be >= 1");
  }

  /// |configs| x |nr_topics| x runs_per_cell.
  std::size_t runs_per_arm() const { return configs.size() * nr_topics_list.size() * runs_per_cell; }
  std::size_t total_runs() const { return runs_per_arm() * datasets.size() * arms.size(); }
};

/// Parameter snapshot shared by every run of one (dataset, arm, config) cell.
inline nlohmann::json snapshot(const PipelineSettings& s, const DatasetSpec& ds, Arm arm,
                               GridMode mode, std::size_t dtm_bins, topic::Binning binning) {
  nlohmann::json j;
  j["dataset"] = ds.id;
  j["stopword_arm"] = std::string(to_string(arm));
  j["stopwords_removed_before_embedding"] = arm == Arm::Without;
  j["dump"] = ds.dump_for(arm).filename().string();
  j["reducer"] = reducer::to_json(s.reducer);
  j["cluster"] = cluster::to_json(s.cluster);
  j["metrics"] = metrics::to_json(s.metrics);
  j["top_n"] = s.top_n;
  j["min_df"] = s.min_df;
  j["mode"] = mode == GridMode::Dtm ? "dtm" : "static";
  if (mode == GridMode::Dtm) {
    j["dtm_bins"] = dtm_bins;
    j["dtm_binning"] = binning == topic::Binning::EqualWidth ? "equal_width" : "calendar_year";
  }
  return j;
}

/// Runs single evaluations with shared, lazily built per-dataset state.
/// Safe to call from several threads at once.
class Experiment {
 public:
  struct ArmData {
    std::vector<corpus::Document> docs;
    std::vector<std::vector<std::string>> tokens;  // coherence reference
    corpus::DocTermCounts doc_term;
  };

  explicit Experiment(PipelineSettings settings) : settings_(std::move(settings)) {}

  const PipelineSettings& settings() const { return settings_; }

  std::shared_ptr<const ArmData> arm_data(const DatasetSpec& ds, Arm arm) {
    return cached(arm_cache_, ds.id + "|" + std::string(to_string(arm)), [&] {
      auto data = std::make_shared<ArmData>();
      data->docs = corpus::load_corpus(ds.corpus, ds.schema);
      if (arm == Arm::Without) {
        const auto stoplist = corpus::StopList::load(ds.stopwords);
        for (auto& d : data->docs) d.raw_text = corpus::remove_stopwords(d.raw_text, stoplist);
      }
      data->tokens = corpus::tokenize_all(data->docs);
      data->doc_term = corpus::build_doc_term(data->tokens, settings_.min_df);
      return std::shared_ptr<const ArmData>(std::move(data));
    });
  }

  std::shared_ptr<const embedding::EmbeddingMatrix> embeddings(const DatasetSpec& ds, Arm arm,
                                                               const embedding::EmbeddingConfig& config) {
    return cached(embedding_cache_, embedding_key(ds, arm, config), [&] {
      const auto& dump = ds.dump_for(arm);
      if (!fs::exists(dump)) throw IoError("hidden-state dump not found: " + dump.string());
      return std::make_shared<const embedding::EmbeddingMatrix>(embedding::embed_corpus(dump, config));
    });
  }

  /// Drops a cached embedding matrix once no pending run needs it.
  void release_embeddings(const DatasetSpec& ds, Arm arm, const embedding::EmbeddingConfig& config) {
    std::lock_guard lock(mutex_);
    embedding_cache_.erase(embedding_key(ds, arm, config));
  }

  /// One static evaluation. Model failures ("no topics found", metric errors)
  /// are captured in the record; a missing dump throws.
  RunRecord run_single(const DatasetSpec& ds, const embedding::EmbeddingConfig& config,
                       std::size_t nr_topics, std::uint64_t seed, Arm arm, std::size_t run_idx = 0) {
    RunRecord rec = start_record(ds, config, nr_topics, seed, arm, run_idx, GridMode::Static, 0,
                                 topic::Binning::EqualWidth);
    const auto t0 = std::chrono::steady_clock::now();
    require_dump(ds, arm);
    try {
      const auto data = arm_data(ds, arm);
      const auto emb = embeddings(ds, arm, config);
      const auto model = fit_model(*data, *emb, nr_topics, seed);
      fill_model_fields(rec, model);
      rec.tc = coherence(model.top_words, data->tokens);
      rec.td = diversity(model.topic_term, model.vocab);
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      rec.error = e.what();
    }
    rec.runtime_seconds = seconds_since(t0);
    return rec;
  }

  /// One dynamic-topic run: a global fit sliced into time bins, one record per bin.
  std::vector<RunRecord> run_dtm(const DatasetSpec& ds, const embedding::EmbeddingConfig& config,
                                 std::size_t nr_topics, std::uint64_t seed, Arm arm,
                                 std::size_t run_idx, std::size_t num_bins, topic::Binning binning) {
    RunRecord base = start_record(ds, config, nr_topics, seed, arm, run_idx, GridMode::Dtm,
                                  num_bins, binning);
    const auto t0 = std::chrono::steady_clock::now();
    require_dump(ds, arm);
    std::vector<RunRecord> out;
    try {
      const auto data = arm_data(ds, arm);
      std::vector<std::optional<std::int64_t>> stamps;
      for (const auto& d : data->docs) stamps.push_back(d.timestamp);
      const auto emb = embeddings(ds, arm, config);
      const auto model = fit_model(*data, *emb, nr_topics, seed);
      fill_model_fields(base, model);
      const auto slices = topic::topics_over_time(model, data->doc_term, stamps, num_bins, binning);
      for (std::size_t b = 0; b < slices.num_bins(); ++b) {
        RunRecord rec = base;
        BinInfo info;
        info.index = b;
        info.start = slices.bins[b].start;
        info.end = slices.bins[b].end;
        info.size = slices.bins[b].doc_count;
        info.noise = slices.bins[b].noise;
        std::size_t assigned = 0;
        std::vector<Eigen::Index> present;
        for (std::size_t k = 0; k < slices.frequencies[b].size(); ++k) {
          assigned += slices.frequencies[b][k];
          if (slices.frequencies[b][k] > 0) present.push_back(static_cast<Eigen::Index>(k));
        }
        info.conserved = assigned + info.noise == info.size;
        info.topics_present = present.size();
        rec.bin = info;
        try {
          if (present.empty()) throw MetricError("no topics in time bin " + std::to_string(b));
          MatrixD rows(static_cast<Eigen::Index>(present.size()), slices.topic_term[b].cols());
          for (std::size_t r = 0; r < present.size(); ++r)
            rows.row(static_cast<Eigen::Index>(r)) = slices.topic_term[b].row(present[r]);
          const auto ranked = topic::top_words(rows, model.vocab, model.top_n);
          rec.tc = coherence(ranked, data->tokens);
          rec.td = diversity(rows, model.vocab);
        } catch (const Error& e) {
          rec.error = e.what();
        }
        out.push_back(std::move(rec));
      }
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      // Global fit failed: one record per bin keeps the record count law intact.
      for (std::size_t b = 0; b < num_bins; ++b) {
        RunRecord rec = base;
        rec.bin = BinInfo{b, 0.0, 0.0, 0, 0, 0, true};
        rec.error = e.what();
        out.push_back(std::move(rec));
      }
    }
    const double elapsed = seconds_since(t0);
    for (auto& r : out) r.runtime_seconds = elapsed;
    return out;
  }

  /// Fits one model on already loaded data; shared by the runs above and the CLI.
  topic::TopicModel fit_model(const ArmData& data, const embedding::EmbeddingMatrix& emb,
                              std::optional<std::size_t> nr_topics, std::uint64_t seed) const {
    if (emb.num_docs() != data.docs.size())
      throw InvalidInput("dump has " + std::to_string(emb.num_docs()) + " documents, corpus has " +
                         std::to_string(data.docs.size()));
    topic::FitParams fp;
    fp.reducer = settings_.reducer;
    fp.cluster = settings_.cluster;
    fp.nr_topics = nr_topics;
    fp.top_n = settings_.top_n;
    fp.seed = seed;
    fp.workers = 1;
    return topic::fit(emb.data, data.doc_term, fp);
  }

 private:
  template <typename T>
  using Cache = std::map<std::string, std::shared_future<std::shared_ptr<const T>>>;

  template <typename T, typename Make>
  std::shared_ptr<const T> cached(Cache<T>& cache, const std::string& key, Make&& make) {
    std::promise<std::shared_ptr<const T>> promise;
    std::shared_future<std::shared_ptr<const T>> future;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache.find(key); it != cache.end()) {
        future = it->second;
      } else {
        future = promise.get_future().share();
        cache.emplace(key, future);
        owner = true;
      }
    }
    if (owner) {
      try {
        promise.set_value(make());
      } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(mutex_);
        cache.erase(key);
      }
    }
    return future.get();
  }

  static std::string embedding_key(const DatasetSpec& ds, Arm arm, const embedding::EmbeddingConfig& c) {
    return ds.id + "|" + std::string(to_string(arm)) + "|" + c.tag();
  }

  static void require_dump(const DatasetSpec& ds, Arm arm) {
    const auto& dump = ds.dump_for(arm);
    if (!fs::exists(dump)) throw IoError("hidden-state dump not found: " + dump.string());
  }

  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  RunRecord start_record(const DatasetSpec& ds, const embedding::EmbeddingConfig& config,
                         std::size_t nr_topics, std::uint64_t seed, Arm arm, std::size_t run_idx,
                         GridMode mode, std::size_t bins, topic::Binning binning) const {
    RunRecord rec;
    rec.mode = mode == GridMode::Dtm ? "dtm" : "static";
    rec.dataset = ds.id;
    rec.config = config;
    rec.nr_topics = nr_topics;
    rec.run_idx = run_idx;
    rec.seed = seed;
    rec.arm = arm;
    rec.params = snapshot(settings_, ds, arm, mode, bins, binning);
    rec.params_hash = snapshot_hash(rec.params);
    return rec;
  }

  static void fill_model_fields(RunRecord& rec, const topic::TopicModel& model) {
    rec.topic_count_found = model.initial_topic_count;
    rec.topic_count = model.num_topics();
    rec.under_count = model.under_count;
  }

  double coherence(const std::vector<topic::RankedTopic>& ranked,
                   const std::vector<std::vector<std::string>>& reference) const {
    const auto lists = topic::word_lists(ranked);
    return metrics::npmi_coherence(lists, reference, settings_.metrics).score;
  }

  double diversity(const MatrixD& topic_term, const std::vector<std::string>& vocab) const {
    const std::size_t k = settings_.metrics.diversity_top_k;
    if (k > vocab.size())
      throw MetricError("vocabulary has " + std::to_string(vocab.size()) + " terms, diversity needs " +
                        std::to_string(k) + " per topic");
    const auto ranked = topic::top_words(topic_term, vocab, k);
    return metrics::topic_diversity(topic::word_lists(ranked), k);
  }

  PipelineSettings settings_;
  std::mutex mutex_;
  Cache<ArmData> arm_cache_;
  Cache<embedding::EmbeddingMatrix> embedding_cache_;
};

// ---------------------------------------------------------------------------
// Grid execution

struct GridResult {
  std::size_t expected_runs = 0;
  std::size_t skipped_runs = 0;    // already persisted with a matching snapshot
  std::size_t executed_runs = 0;
  std::size_t failed_runs = 0;     // records carrying an error
  std::size_t records_written = 0;
  bool interrupted = false;        // stopped early by max_runs

  bool ok() const { return failed_runs == 0 && !interrupted; }
};

namespace detail {

struct PlannedRun {
  const DatasetSpec* dataset = nullptr;
  Arm arm = Arm::With;
  embedding::EmbeddingConfig config;
  std::size_t nr_topics = 0;
  std::size_t run_idx = 0;
};

// Rewrites `path` keeping only complete runs: the unterminated tail line of an
// interrupted write is dropped, and dynamic-topic runs missing bins are removed
// so they get recomputed. Returns the surviving records.
inline std::vector<RunRecord> compact_records(const fs::path& path, std::size_t dtm_bins) {
  if (!fs::exists(path)) return {};
  auto records = read_records(path);
  std::map<std::string, std::set<std::size_t>> bins_seen;
  for (const auto& r : records)
    if (r.bin) bins_seen[r.run_key() + "#" + r.params_hash].insert(r.bin->index);
  std::vector<RunRecord> kept;
  for (auto& r : records) {
    if (r.bin && bins_seen[r.run_key() + "#" + r.params_hash].size() < dtm_bins) continue;
    kept.push_back(std::move(r));
  }
  const auto size = fs::file_size(path);
  std::string content;
  for (const auto& r : kept) content += to_json(r).dump() + "\n";
  if (kept.size() != records.size() || content.size() != size) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      if (!out) throw IoError("failed compacting records file: " + path.string());
    }
    fs::rename(tmp, path);
  }
  return kept;
}

}  // namespace detail

/// Runs every (dataset, arm, config, nr_topics, run_idx) of the spec, appending
/// records to `records_path`. Runs already persisted with the same parameter
/// snapshot are skipped, so an interrupted grid resumes where it stopped.
inline GridResult run_grid(const GridSpec& spec, const fs::path& records_path,
                           Experiment* shared_experiment = nullptr) {
  spec.validate();
  for (const auto& ds : spec.datasets)
    for (Arm arm : spec.arms) {
      const auto& dump = ds.dump_for(arm);
      if (!fs::exists(dump)) throw IoError("hidden-state dump not found: " + dump.string());
    }

  std::optional<Experiment> owned;
  Experiment& experiment = shared_experiment ? *shared_experiment : owned.emplace(spec.pipeline);
  const bool dtm = spec.mode == GridMode::Dtm;

  std::set<std::string> done;
  for (const auto& r : detail::compact_records(records_path, dtm ? spec.dtm_bins : 0))
    done.insert(r.run_key() + "#" + r.params_hash);

  GridResult result;
  result.expected_runs = spec.total_runs();
  std::vector<detail::PlannedRun> plan;
  std::map<std::string, std::size_t> pending;  // embedding key -> runs still to execute
  for (const auto& ds : spec.datasets)
    for (Arm arm : spec.arms)
      for (const auto& config : spec.configs)
        for (auto k : spec.nr_topics_list)
          for (std::size_t run = 0; run < spec.runs_per_cell; ++run) {
            RunRecord probe;
            probe.mode = dtm ? "dtm" : "static";
            probe.dataset = ds.id;
            probe.arm = arm;
            probe.config = config;
            probe.nr_topics = k;
            probe.run_idx = run;
            const auto hash = snapshot_hash(snapshot(experiment.settings(), ds, arm, spec.mode,
                                                     spec.dtm_bins, spec.dtm_binning));
            if (done.contains(probe.run_key() + "#" + hash)) {
              ++result.skipped_runs;
              continue;
            }
            plan.push_back({&ds, arm, config, k, run});
            ++pending[ds.id + "|" + std::string(to_string(arm)) + "|" + config.tag()];
          }
  if (spec.max_runs && plan.size() > *spec.max_runs) {
    plan.resize(*spec.max_runs);
    result.interrupted = true;
  }

  RecordWriter writer(records_path);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> executed{0}, failed{0}, written{0};
  std::mutex pending_mutex;
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) return;
      {
        std::lock_guard lock(fatal_mutex);
        if (fatal) return;
      }
      const auto& p = plan[i];
      try {
        const std::uint64_t seed = derive_seed(spec.base_seed, p.dataset->id, to_string(p.arm),
                                               p.config.tag(), p.nr_topics, p.run_idx);
        std::vector<RunRecord> records;
        if (dtm) {
          records = experiment.run_dtm(*p.dataset, p.config, p.nr_topics, seed, p.arm, p.run_idx,
                                       spec.dtm_bins, spec.dtm_binning);
        } else {
          records.push_back(
              experiment.run_single(*p.dataset, p.config, p.nr_topics, seed, p.arm, p.run_idx));
        }
        bool any_error = false;
        for (const auto& r : records) any_error = any_error || r.error.has_value();
        if (any_error) ++failed;
        writer.append(records);
        written += records.size();
        ++executed;
        const auto key = p.dataset->id + "|" + std::string(to_string(p.arm)) + "|" + p.config.tag();
        std::lock_guard lock(pending_mutex);
        if (--pending[key] == 0) experiment.release_embeddings(*p.dataset, p.arm, p.config);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };

  const unsigned workers = resolve_workers(spec.workers);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  result.executed_runs = executed;
  result.failed_runs = failed;
  result.records_written = written;
  logger()->info("grid: {} runs expected, {} skipped, {} executed, {} failed{}", result.expected_runs,
                 result.skipped_runs, result.executed_runs, result.failed_runs,
                 result.interrupted ? " (stopped early)" : "");
  return result;
}

// ---------------------------------------------------------------------------
// Grid spec files (JSON)

namespace detail {

inline fs::path resolve_path(const std::string& text, const fs::path& spec_dir) {
  fs::path p(text);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("LAYERTOPIC_DATA_DIR"); root && *root) return fs::path(root) / p;
  return spec_dir / p;
}

}  // namespace detail

/// Parses a grid spec. Relative dataset paths resolve against
/// $LAYERTOPIC_DATA_DIR when set, otherwise against the spec file's directory.
inline GridSpec parse_grid_spec(const nlohmann::json& j, const fs::path& spec_dir = ".") {
  GridSpec spec;
  try {
    for (const auto& d : j.at("datasets")) {
      DatasetSpec ds;
      ds.id = d.at("id").get<std::string>();
      ds.corpus = detail::resolve_path(d.at("corpus").get<std::string>(), spec_dir);
      ds.schema.text_column = d.value("text_column", std::string("text"));
      if (d.contains("time_column")) ds.schema.time_column = d.at("time_column").get<std::string>();
      const auto delim = d.value("delimiter", std::string(","));
      ds.schema.delimiter = delim == "\\t" ? '\t' : delim.empty() ? ',' : delim.front();
      if (d.contains("dump_with"))
        ds.dump_with = detail::resolve_path(d.at("dump_with").get<std::string>(), spec_dir);
      if (d.contains("dump_without"))
        ds.dump_without = detail::resolve_path(d.at("dump_without").get<std::string>(), spec_dir);
      if (d.contains("stopwords"))
        ds.stopwords = detail::resolve_path(d.at("stopwords").get<std::string>(), spec_dir);
      spec.datasets.push_back(std::move(ds));
    }
    if (j.contains("configs") && !(j.at("configs").is_string() && j.at("configs") == "all")) {
      spec.configs.clear();
      for (const auto& c : j.at("configs"))
        spec.configs.push_back(embedding::EmbeddingConfig::parse(c.get<std::string>()));
    }
    if (j.contains("nr_topics")) spec.nr_topics_list = j.at("nr_topics").get<std::vector<std::size_t>>();
    spec.runs_per_cell = j.value("runs_per_cell", spec.runs_per_cell);
    spec.base_seed = j.value("base_seed", spec.base_seed);
    const auto mode = j.value("mode", std::string("static"));
    if (mode != "static" && mode != "dtm") throw ConfigError("mode must be 'static' or 'dtm'");
    spec.mode = mode == "dtm" ? GridMode::Dtm : GridMode::Static;
    spec.dtm_bins = j.value("dtm_bins", spec.dtm_bins);
    const auto binning = j.value("dtm_binning", std::string("equal_width"));
    if (binning != "equal_width" && binning != "calendar_year")
      throw ConfigError("dtm_binning must be 'equal_width' or 'calendar_year'");
    spec.dtm_binning = binning == "calendar_year" ? topic::Binning::CalendarYear
                                                  : topic::Binning::EqualWidth;
    if (j.contains("arms")) {
      spec.arms.clear();
      for (const auto& a : j.at("arms")) spec.arms.push_back(parse_arm(a.get<std::string>()));
    }
    spec.workers = j.value("workers", spec.workers);

    auto& p = spec.pipeline;
    if (j.contains("reducer")) {
      const auto& r = j.at("reducer");
      const auto rmode = r.value("mode", std::string("umap"));
      if (rmode != "umap" && rmode != "pca") throw ConfigError("reducer.mode must be 'umap' or 'pca'");
      p.reducer.mode = rmode == "pca" ? reducer::Mode::Pca : reducer::Mode::Umap;
      p.reducer.n_neighbors = r.value("n_neighbors", p.reducer.n_neighbors);
      p.reducer.n_components = r.value("n_components", p.reducer.n_components);
      p.reducer.min_dist = r.value("min_dist", p.reducer.min_dist);
      p.reducer.n_epochs = r.value("n_epochs", p.reducer.n_epochs);
      const auto metric = r.value("metric", std::string("cosine"));
      if (metric != "cosine" && metric != "euclidean")
        throw ConfigError("reducer.metric must be 'cosine' or 'euclidean'");
      p.reducer.metric = metric == "euclidean" ? reducer::Metric::Euclidean : reducer::Metric::Cosine;
    }
    if (j.contains("cluster")) {
      const auto& c = j.at("cluster");
      p.cluster.min_cluster_size = c.value("min_cluster_size", p.cluster.min_cluster_size);
      if (c.contains("min_samples")) p.cluster.min_samples = c.at("min_samples").get<std::size_t>();
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      p.metrics.coherence_top_n = m.value("coherence_top_n", p.metrics.coherence_top_n);
      p.metrics.diversity_top_k = m.value("diversity_top_k", p.metrics.diversity_top_k);
      p.metrics.window = m.value("window", p.metrics.window);
      const auto rule = m.value("zero_cooccurrence", std::string("minus_one"));
      if (rule != "minus_one" && rule != "epsilon")
        throw ConfigError("metrics.zero_cooccurrence must be 'minus_one' or 'epsilon'");
      p.metrics.zero_rule = rule == "epsilon" ? metrics::ZeroCooccurrence::Epsilon
                                              : metrics::ZeroCooccurrence::MinusOne;
    }
    p.top_n = j.value("top_n", p.top_n);
    p.min_df = j.value("min_df", p.min_df);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid grid spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline GridSpec load_grid_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid spec: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("grid spec is not valid JSON: " + std::string(e.what()));
  }
  return parse_grid_spec(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

}  // namespace layertopic::harness
