#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layertopic/layertopic.hpp"

namespace fs = std::filesystem;
using namespace layertopic;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  fs::path out_dir = ".";
  std::string arm = "with";
  bool verbose = false;
};

const harness::DatasetSpec& pick_dataset(const harness::GridSpec& spec, const std::string& id) {
  if (id.empty()) return spec.datasets.front();
  for (const auto& ds : spec.datasets)
    if (ds.id == id) return ds;
  throw UsageError("dataset '" + id + "' is not in the spec");
}

embedding::EmbeddingConfig parse_config(const std::string& tag) {
  try {
    return embedding::EmbeddingConfig::parse(tag);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ParameterError*>(&e))
    return 2;
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layertopic: layer-wise embedding configurations for density-based topic models"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base seed (overrides the spec's base_seed)");
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores)");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--arm", g.arm, "Stop-word arm")->check(CLI::IsMember({"with", "without"}));
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  // embed
  auto* embed = app.add_subcommand("embed", "Hidden-state dump + config -> embedding file");
  fs::path embed_dump, embed_out;
  std::string embed_config = embedding::kDefaultConfig.tag();
  std::size_t batch = 256;
  embed->add_option("--dump", embed_dump, "HSD1 hidden-state dump")->required();
  embed->add_option("--config", embed_config, "aggregation/pooling, e.g. last_layer/mean");
  embed->add_option("--batch-size", batch, "Documents per batch");
  embed->add_option("--out", embed_out, "Output file (default <out-dir>/embeddings.emb)");

  // shared by fit / eval / grid / dtm
  fs::path spec_path;
  std::string dataset_id;
  std::string config_tag = embedding::kDefaultConfig.tag();
  std::optional<std::size_t> nr_topics;
  std::size_t run_idx = 0;

  auto* fit = app.add_subcommand("fit", "Fit one topic model and export it");
  std::optional<std::size_t> fit_bins;
  std::string binning = "equal_width";
  fit->add_option("--spec", spec_path, "Grid spec (JSON)")->required();
  fit->add_option("--dataset", dataset_id, "Dataset id (default: first in spec)");
  fit->add_option("--config", config_tag, "aggregation/pooling");
  fit->add_option("--nr-topics", nr_topics, "Target topic count (default: as clustered)");
  fit->add_option("--bins", fit_bins, "Also export topics over time with this many bins");
  fit->add_option("--binning", binning)->check(CLI::IsMember({"equal_width", "calendar_year"}));

  auto* eval = app.add_subcommand("eval", "One evaluation run; appends a record");
  fs::path eval_records;
  eval->add_option("--spec", spec_path, "Grid spec (JSON)")->required();
  eval->add_option("--dataset", dataset_id, "Dataset id (default: first in spec)");
  eval->add_option("--config", config_tag, "aggregation/pooling");
  eval->add_option("--nr-topics", nr_topics, "Target topic count")->required();
  eval->add_option("--run-idx", run_idx, "Run index used for seed derivation");
  eval->add_option("--records", eval_records, "Records file (default <out-dir>/records.jsonl)");

  std::optional<std::size_t> max_runs;
  fs::path grid_records;
  std::optional<std::size_t> dtm_bins;
  auto* grid = app.add_subcommand("grid", "Run a full static grid with resume");
  grid->add_option("--spec", spec_path, "Grid spec (JSON)")->required();
  grid->add_option("--records", grid_records, "Records file (default <out-dir>/records.jsonl)");
  grid->add_option("--max-runs", max_runs, "Stop after this many new runs");
  auto* dtm = app.add_subcommand("dtm", "Run a dynamic-topic grid (per-bin records)");
  dtm->add_option("--spec", spec_path, "Grid spec (JSON)")->required();
  dtm->add_option("--records", grid_records, "Records file (default <out-dir>/dtm_records.jsonl)");
  dtm->add_option("--max-runs", max_runs, "Stop after this many new runs");
  dtm->add_option("--bins", dtm_bins, "Time bins (default from spec, 9)");

  auto* report = app.add_subcommand("report", "Aggregate records into a table");
  std::vector<fs::path> report_inputs;
  std::string group_by = "config", format = "text";
  fs::path report_out;
  report->add_option("records", report_inputs, "Records files")->required();
  report->add_option("--group-by", group_by)->check(CLI::IsMember({"config", "topics", "timestep"}));
  report->add_option("--format", format)->check(CLI::IsMember({"text", "csv", "markdown", "md"}));
  report->add_option("--out", report_out, "Write to file instead of stdout");

  auto* plot = app.add_subcommand("plot-data", "Emit plot series as JSON");
  std::string kind;
  fs::path plot_input, plot_out;
  std::optional<std::size_t> top;
  plot->add_option("--kind", kind, "metric_curves | word_scores | topic_frequency")->required();
  plot->add_option("--input", plot_input, "Records, model export or time-slice export")->required();
  plot->add_option("--top", top, "metric_curves: keep the N best configs per column");
  plot->add_option("--out", plot_out, "Output file (default <out-dir>/<kind>.json)");

  auto* fixture = app.add_subcommand("fixture", "Write the synthetic three-theme fixture");
  fs::path stoplist = harness::default_stoplist();
  fixture->add_option("--stopwords", stoplist, "Stop list used for the 'without' dump");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version exit 0; every other parse failure is a usage error
    return app.exit(e) == 0 ? 0 : 2;
  }
  logger()->set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    fs::create_directories(g.out_dir);
    const auto arm = harness::parse_arm(g.arm);

    if (*embed) {
      embedding::EmbedOptions opts;
      opts.workers = g.workers;
      opts.batch_size = batch;
      const auto matrix = embedding::embed_corpus(embed_dump, parse_config(embed_config), opts);
      const auto out = embed_out.empty() ? g.out_dir / "embeddings.emb" : embed_out;
      embedding::write_embeddings(out, matrix);
      logger()->info("wrote {} x {} embeddings to {}", matrix.data.rows(), matrix.data.cols(), out.string());
      return 0;
    }

    if (*fixture) {
      synthetic::write_fixture(g.out_dir, synthetic::make_fixture(), stoplist);
      logger()->info("fixture written to {}", g.out_dir.string());
      return 0;
    }

    if (*report) {
      std::vector<harness::RunRecord> records;
      for (const auto& p : report_inputs) {
        auto r = harness::read_records(p);
        records.insert(records.end(), r.begin(), r.end());
      }
      const auto table = harness::build_report(records, harness::parse_group_by(group_by));
      const auto text = harness::render(table, harness::parse_report_format(format));
      if (report_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(report_out, std::ios::trunc);
        if (!out) throw IoError("cannot write " + report_out.string());
        out << text;
      }
      return 0;
    }

    if (*plot) {
      const auto k = harness::parse_plot_kind(kind);
      nlohmann::json series;
      if (k == harness::PlotKind::MetricCurves) {
        const auto records = harness::read_records(plot_input);
        series = harness::metric_curves(records, top);
      } else if (k == harness::PlotKind::WordScores) {
        series = harness::word_scores(topic::read_model(plot_input));
      } else {
        series = harness::topic_frequency(topic::read_time_slices(plot_input));
      }
      const auto out = plot_out.empty() ? g.out_dir / (kind + ".json") : plot_out;
      write_json(out, series);
      logger()->info("wrote {} series to {}", series["series"].size(), out.string());
      return 0;
    }

    auto spec = harness::load_grid_spec(spec_path);
    if (g.seed) spec.base_seed = *g.seed;
    spec.workers = g.workers;
    const auto& ds = pick_dataset(spec, dataset_id);
    harness::Experiment experiment(spec.pipeline);

    if (*fit) {
      const auto config = parse_config(config_tag);
      const std::uint64_t seed = harness::derive_seed(spec.base_seed, ds.id, harness::to_string(arm), config.tag(),
                                                      nr_topics.value_or(0), run_idx);
      const auto data = experiment.arm_data(ds, arm);
      const auto emb = experiment.embeddings(ds, arm, config);
      const auto model = experiment.fit_model(*data, *emb, nr_topics, seed);
      nlohmann::json meta{{"dataset", ds.id}, {"config", config.tag()}, {"seed", seed},
                          {"stopword_arm", std::string(harness::to_string(arm))}};
      topic::write_model(g.out_dir / "model.jsonl", model, meta);
      logger()->info("{} topics ({} found), {} noise documents -> {}", model.num_topics(),
                     model.initial_topic_count, model.noise_count(), (g.out_dir / "model.jsonl").string());
      if (fit_bins) {
        std::vector<std::optional<std::int64_t>> stamps;
        for (const auto& d : data->docs) stamps.push_back(d.timestamp);
        const auto slices = topic::topics_over_time(
            model, data->doc_term, stamps, *fit_bins,
            binning == "calendar_year" ? topic::Binning::CalendarYear : topic::Binning::EqualWidth);
        topic::write_time_slices(g.out_dir / "time_slices.jsonl", slices, model, meta);
      }
      return 0;
    }

    if (*eval) {
      const auto config = parse_config(config_tag);
      const std::uint64_t seed =
          harness::derive_seed(spec.base_seed, ds.id, harness::to_string(arm), config.tag(), *nr_topics, run_idx);
      const auto rec = experiment.run_single(ds, config, *nr_topics, seed, arm, run_idx);
      harness::RecordWriter writer(eval_records.empty() ? g.out_dir / "records.jsonl" : eval_records);
      writer.append(rec);
      if (rec.error) {
        std::cout << "error: " << *rec.error << '\n';
        return 1;
      }
      std::printf("tc=%.6f td=%.6f topics=%zu found=%zu under_count=%s\n", *rec.tc, *rec.td, rec.topic_count,
                  rec.topic_count_found, rec.under_count ? "true" : "false");
      return 0;
    }

    if (*grid || *dtm) {
      if (*dtm) {
        spec.mode = harness::GridMode::Dtm;
        if (dtm_bins) spec.dtm_bins = *dtm_bins;
      }
      spec.max_runs = max_runs;
      const auto path = grid_records.empty() ? g.out_dir / (*dtm ? "dtm_records.jsonl" : "records.jsonl")
                                             : grid_records;
      const auto result = harness::run_grid(spec, path, &experiment);
      std::printf("runs per dataset arm: %zu; total: %zu; skipped %zu, executed %zu, failed %zu%s\n",
                  spec.runs_per_arm(), result.expected_runs, result.skipped_runs, result.executed_runs,
                  result.failed_runs, result.interrupted ? " (stopped early)" : "");
      return result.failed_runs > 0 ? 1 : 0;
    }
  } catch (const std::exception& e) {
    logger()->error("{}", e.what());
    return exit_code_for(e);
  }
  return 0;
}
