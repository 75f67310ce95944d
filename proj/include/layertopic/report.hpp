#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "layertopic/error.hpp"
#include "layertopic/records.hpp"

namespace layertopic::harness {

enum class GroupBy { Config, Topics, Timestep };

inline GroupBy parse_group_by(std::string_view text) {
  if (text == "config") return GroupBy::Config;
  if (text == "topics") return GroupBy::Topics;
  if (text == "timestep") return GroupBy::Timestep;
  throw UsageError("group_by must be one of config, topics, timestep; got '" + std::string(text) + "'");
}

enum class ReportFormat { Text, Csv, Markdown };

inline ReportFormat parse_report_format(std::string_view text) {
  if (text == "text") return ReportFormat::Text;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  throw UsageError("format must be one of text, csv, markdown; got '" + std::string(text) + "'");
}

struct CellStats {
  double tc = 0.0;
  double td = 0.0;
  std::size_t runs = 0;    // records contributing metrics
  std::size_t failed = 0;  // records carrying an error
};

struct ReportRow {
  embedding::EmbeddingConfig config;
  std::optional<std::size_t> key;  // nr_topics or bin index, per grouping
  std::vector<std::optional<CellStats>> cells;  // one per column
  std::vector<bool> best_tc, best_td;
};

struct Report {
  GroupBy group_by = GroupBy::Config;
  std::vector<std::string> columns;  // "dataset/arm", with a "/dtm" suffix for dynamic runs
  std::vector<ReportRow> rows;
  std::vector<std::string> footer;
};

namespace detail {

inline std::string column_of(const RunRecord& r) {
  std::string c = r.dataset + "/" + std::string(to_string(r.arm));
  if (r.mode == "dtm") c += "/dtm";
  return c;
}

inline std::size_t config_rank(const embedding::EmbeddingConfig& c) {
  std::size_t a = 0, p = 0;
  for (std::size_t i = 0; i < embedding::kAggregationModes.size(); ++i)
    if (embedding::kAggregationModes[i] == c.aggregation) a = i;
  for (std::size_t i = 0; i < embedding::kPoolingStrategies.size(); ++i)
    if (embedding::kPoolingStrategies[i] == c.pooling) p = i;
  return a * embedding::kPoolingStrategies.size() + p;
}

struct Accum {
  double tc = 0.0, td = 0.0;
  std::size_t n = 0, failed = 0;
  void add(const RunRecord& r) {
    if (r.error || !r.tc || !r.td) {
      ++failed;
      return;
    }
    tc += *r.tc;
    td += *r.td;
    ++n;
  }
  std::optional<CellStats> mean() const {
    if (n == 0) return failed ? std::optional<CellStats>(CellStats{NAN, NAN, 0, failed}) : std::nullopt;
    return CellStats{tc / static_cast<double>(n), td / static_cast<double>(n), n, failed};
  }
};

inline std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Aggregates run records into per-(config, pooling) cells. Static cells
/// average every run and topic count. Dynamic cells average runs per time bin
/// first, then the bins (grouping by timestep keeps the per-bin means).
inline Report build_report(std::span<const RunRecord> records, GroupBy group_by = GroupBy::Config) {
  if (records.empty()) throw ReportError("no records to report");

  // Snapshot consistency: every record of one (column, config) cell must share a hash.
  std::map<std::pair<std::string, std::string>, std::set<std::string>> hashes;
  for (const auto& r : records) hashes[{detail::column_of(r), r.config.tag()}].insert(r.params_hash);
  std::vector<std::string> conflicts;
  for (const auto& [cell, set] : hashes)
    if (set.size() > 1) {
      std::string msg = cell.first + " " + cell.second + ":";
      for (const auto& h : set) msg += " " + h;
      conflicts.push_back(msg);
    }
  if (!conflicts.empty()) {
    std::string msg = "inconsistent parameter snapshots within cells:";
    for (const auto& c : conflicts) msg += "\n  " + c;
    throw ReportError(msg);
  }

  Report report;
  report.group_by = group_by;
  std::set<std::string> column_set;
  for (const auto& r : records) column_set.insert(detail::column_of(r));
  report.columns.assign(column_set.begin(), column_set.end());
  auto column_index = [&](const RunRecord& r) {
    return static_cast<std::size_t>(
        std::lower_bound(report.columns.begin(), report.columns.end(), detail::column_of(r)) -
        report.columns.begin());
  };

  // (config rank, key) -> column -> accumulators. For dynamic records under
  // GroupBy::Config the inner map first splits by bin.
  using RowKey = std::pair<std::size_t, std::optional<std::size_t>>;
  std::map<RowKey, std::map<std::size_t, std::map<std::size_t, detail::Accum>>> acc;
  std::map<RowKey, embedding::EmbeddingConfig> configs;
  for (const auto& r : records) {
    std::optional<std::size_t> key;
    if (group_by == GroupBy::Topics) key = r.nr_topics;
    if (group_by == GroupBy::Timestep) {
      if (!r.bin) throw ReportError("grouping by timestep needs dynamic-topic records");
      key = r.bin->index;
    }
    const RowKey rk{detail::config_rank(r.config), key};
    configs[rk] = r.config;
    const std::size_t sub = (group_by == GroupBy::Config && r.bin) ? r.bin->index : 0;
    acc[rk][column_index(r)][sub].add(r);
  }

  for (const auto& [rk, by_column] : acc) {
    ReportRow row;
    row.config = configs[rk];
    row.key = rk.second;
    row.cells.assign(report.columns.size(), std::nullopt);
    for (const auto& [col, by_sub] : by_column) {
      if (by_sub.size() == 1) {
        row.cells[col] = by_sub.begin()->second.mean();
        continue;
      }
      // Mean over bins of the per-bin means.
      double tc = 0.0, td = 0.0;
      std::size_t bins = 0, runs = 0, failed = 0;
      for (const auto& [bin, a] : by_sub) {
        failed += a.failed;
        if (a.n == 0) continue;
        tc += a.tc / static_cast<double>(a.n);
        td += a.td / static_cast<double>(a.n);
        runs += a.n;
        ++bins;
      }
      if (bins == 0)
        row.cells[col] = CellStats{NAN, NAN, 0, failed};
      else
        row.cells[col] = CellStats{tc / static_cast<double>(bins), td / static_cast<double>(bins), runs, failed};
    }
    report.rows.push_back(std::move(row));
  }

  // Best markers per column; with a key, rows are compared within the same key.
  for (auto& row : report.rows) {
    row.best_tc.assign(report.columns.size(), false);
    row.best_td.assign(report.columns.size(), false);
  }
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    std::map<std::optional<std::size_t>, std::pair<double, double>> best;
    for (const auto& row : report.rows) {
      if (!row.cells[c] || row.cells[c]->runs == 0) continue;
      auto [it, inserted] = best.try_emplace(row.key, row.cells[c]->tc, row.cells[c]->td);
      if (!inserted) {
        it->second.first = std::max(it->second.first, row.cells[c]->tc);
        it->second.second = std::max(it->second.second, row.cells[c]->td);
      }
    }
    for (auto& row : report.rows) {
      if (!row.cells[c] || row.cells[c]->runs == 0) continue;
      row.best_tc[c] = row.cells[c]->tc == best[row.key].first;
      row.best_td[c] = row.cells[c]->td == best[row.key].second;
    }
  }

  // Footer: settings no reference value exists for, taken from the snapshots.
  std::set<std::string> notes;
  for (const auto& r : records) {
    if (!r.params.contains("metrics")) continue;
    const auto& m = r.params.at("metrics");
    std::ostringstream os;
    os << "assumed defaults: coherence top_n=" << m.value("coherence_top_n", 0)
       << ", diversity top_k=" << m.value("diversity_top_k", 0) << ", NPMI window=" << m.value("window", 0);
    notes.insert(os.str());
  }
  report.footer.assign(notes.begin(), notes.end());
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.error ? 1 : 0;
  report.footer.push_back(std::to_string(records.size()) + " records, " + std::to_string(failed) + " failed");
  return report;
}

namespace detail {

inline std::string key_header(GroupBy g) {
  return g == GroupBy::Topics ? "nr_topics" : g == GroupBy::Timestep ? "bin" : "";
}

inline std::vector<std::vector<std::string>> table_cells(const Report& report, bool markdown) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> header{"Configuration", "Pooling"};
  if (report.group_by != GroupBy::Config) header.push_back(key_header(report.group_by));
  for (const auto& c : report.columns) {
    header.push_back(c + " TC");
    header.push_back(c + " TD");
  }
  out.push_back(std::move(header));
  for (const auto& row : report.rows) {
    std::vector<std::string> line{std::string(embedding::display_name(row.config.aggregation)),
                                  std::string(embedding::display_name(row.config.pooling))};
    if (row.key) line.push_back(std::to_string(*row.key));
    for (std::size_t c = 0; c < report.columns.size(); ++c) {
      if (!row.cells[c]) {
        line.push_back("");
        line.push_back("");
        continue;
      }
      auto mark = [&](double v, bool best) {
        const auto s = fixed(v, 3);
        if (!best) return s;
        return markdown ? "**" + s + "**" : s + "*";
      };
      line.push_back(mark(row.cells[c]->tc, row.best_tc[c]));
      line.push_back(mark(row.cells[c]->td, row.best_td[c]));
    }
    out.push_back(std::move(line));
  }
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

}  // namespace detail

inline std::string render(const Report& report, ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::Csv) {
    // Long format at full precision so downstream tools can recompute.
    os << "column,config,pooling,key,tc,td,runs,failed,best_tc,best_td\n";
    for (const auto& row : report.rows)
      for (std::size_t c = 0; c < report.columns.size(); ++c) {
        if (!row.cells[c]) continue;
        const auto& s = *row.cells[c];
        char tc[40], td[40];
        std::snprintf(tc, sizeof tc, "%.17g", s.tc);
        std::snprintf(td, sizeof td, "%.17g", s.td);
        os << detail::csv_escape(report.columns[c]) << ',' << embedding::to_string(row.config.aggregation) << ','
           << embedding::to_string(row.config.pooling) << ',' << (row.key ? std::to_string(*row.key) : "")
           << ',' << tc << ',' << td << ',' << s.runs << ',' << s.failed << ','
           << (row.best_tc[c] ? 1 : 0) << ',' << (row.best_td[c] ? 1 : 0) << '\n';
      }
    return os.str();
  }

  const bool md = format == ReportFormat::Markdown;
  const auto cells = detail::table_cells(report, md);
  if (md) {
    for (std::size_t r = 0; r < cells.size(); ++r) {
      os << '|';
      for (const auto& c : cells[r]) os << ' ' << c << " |";
      os << '\n';
      if (r == 0) {
        os << '|';
        for (std::size_t c = 0; c < cells[0].size(); ++c) os << (c < 2 ? " --- |" : " ---: |");
        os << '\n';
      }
    }
    for (const auto& f : report.footer) os << "\n_" << f << "_\n";
    return os.str();
  }

  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& s = cells[r][c];
      const std::string pad(width[c] - s.size(), ' ');
      if (c < 2) os << s << pad;
      else os << pad << s;
      os << (c + 1 < cells[r].size() ? "  " : "");
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  os << "(* marks the column maximum)\n";
  for (const auto& f : report.footer) os << f << '\n';
  return os.str();
}

}  // namespace layertopic::harness
