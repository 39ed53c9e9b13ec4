#pragma once

// Benchmark results: per-fold score cells, their fold means, retention
// averages, predictor-by-selector tables and JSON / CSV / plot-data emitters.

#include "kanfs/importance.hpp"

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

namespace kanfs {

inline const std::string kAllFeaturesLabel = "All Features";

struct ScoreCell {
  std::string selector;  // display label
  double retention = 0.0;
  std::string predictor;  // display label
  int fold = 0;
  std::optional<double> score;  // unset when the cell failed
  std::string error;

  friend bool operator==(const ScoreCell&, const ScoreCell&) = default;
};

/// What one selector picked on one training fold.
struct SelectionRecord {
  std::string selector;
  int fold = 0;
  ImportanceVector importance;
  std::vector<double> ranking;
  std::map<double, std::vector<Index>> selected;  // retention -> ascending column indices
  std::string error;

  friend bool operator==(const SelectionRecord&, const SelectionRecord&) = default;
};

using AggregateKey = std::tuple<std::string, double, std::string>;  // selector, retention, predictor

struct BenchmarkReport {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> selectors;   // labels in roster order, baseline first when present
  std::vector<std::string> predictors;  // labels in roster order
  std::vector<double> retentions;
  int folds = 0;
  std::vector<std::string> feature_names;
  std::vector<ScoreCell> cells;
  std::vector<SelectionRecord> selections;
  std::map<AggregateKey, double> aggregates;
  std::map<std::pair<std::string, std::string>, double> retention_averages;

  /// Recomputes fold means and retention averages from the cells.
  void finalize() {
    std::map<AggregateKey, std::pair<double, int>> acc;
    for (const auto& c : cells)
      if (c.score) {
        auto& a = acc[{c.selector, c.retention, c.predictor}];
        a.first += *c.score;
        a.second += 1;
      }
    aggregates.clear();
    for (const auto& [k, a] : acc) aggregates[k] = a.first / a.second;
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> avg;
    for (const auto& [k, mean] : aggregates) {
      auto& a = avg[{std::get<0>(k), std::get<2>(k)}];
      a.first += mean;
      a.second += 1;
    }
    retention_averages.clear();
    for (const auto& [k, a] : avg) retention_averages[k] = a.first / a.second;
  }

  [[nodiscard]] std::optional<double> aggregate(const std::string& selector, double retention,
                                                const std::string& predictor) const {
    const auto it = aggregates.find({selector, retention, predictor});
    if (it == aggregates.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] std::vector<double> fold_scores(const std::string& selector, double retention,
                                                const std::string& predictor) const {
    std::vector<double> out;
    for (const auto& c : cells)
      if (c.selector == selector && c.retention == retention && c.predictor == predictor && c.score)
        out.push_back(*c.score);
    return out;
  }

  [[nodiscard]] std::size_t failed_cells() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const ScoreCell& c) { return !c.score; }));
  }

  friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

// ---------------------------------------------------------------------------
// Tables

struct ResultTable {
  double retention = 0.0;
  std::vector<std::string> header;  // "Models", then one entry per column
  std::vector<std::string> row_labels;
  std::vector<std::vector<std::optional<double>>> values;
};

/**
 * Predictors x selectors grid of fold means at `retention`. Rows and the
 * selector columns are in alphabetical order; "All Features" comes first and
 * reports the passthrough baseline.
 */
inline ResultTable to_table(const BenchmarkReport& report, double retention) {
  if (std::find(report.retentions.begin(), report.retentions.end(), retention) == report.retentions.end())
    throw Error(ErrorCode::unknown_retention, "retention " + std::to_string(retention) + " not in this run");
  ResultTable t;
  t.retention = retention;
  t.header.push_back("Models");
  std::vector<std::string> columns;
  const bool has_baseline =
      std::find(report.selectors.begin(), report.selectors.end(), kAllFeaturesLabel) != report.selectors.end();
  for (const auto& s : report.selectors)
    if (s != kAllFeaturesLabel) columns.push_back(s);
  std::sort(columns.begin(), columns.end());
  if (has_baseline) columns.insert(columns.begin(), kAllFeaturesLabel);
  t.header.insert(t.header.end(), columns.begin(), columns.end());
  t.row_labels = report.predictors;
  std::sort(t.row_labels.begin(), t.row_labels.end());
  for (const auto& p : t.row_labels) {
    std::vector<std::optional<double>> row;
    for (const auto& s : columns) row.push_back(report.aggregate(s, s == kAllFeaturesLabel ? 100.0 : retention, p));
    t.values.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Serialization

enum class ReportFormat { json, csv, plotdata };

inline ReportFormat report_format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "plotdata") return ReportFormat::plotdata;
  throw Error(ErrorCode::config, "unknown report format '" + std::string(s) + "'");
}

inline nlohmann::json to_json(const BenchmarkReport& r) {
  using nlohmann::json;
  json j;
  j["format"] = "kanfs-report/1";
  j["metadata"] = r.metadata;
  j["selectors"] = r.selectors;
  j["predictors"] = r.predictors;
  j["retentions"] = r.retentions;
  j["folds"] = r.folds;
  j["feature_names"] = r.feature_names;
  j["cells"] = json::array();
  for (const auto& c : r.cells) {
    json cj{{"selector", c.selector}, {"retention", c.retention}, {"predictor", c.predictor}, {"fold", c.fold}};
    cj["score"] = c.score ? json(*c.score) : json(nullptr);
    if (!c.error.empty()) cj["error"] = c.error;
    j["cells"].push_back(std::move(cj));
  }
  j["selections"] = json::array();
  for (const auto& s : r.selections) {
    json sj{{"selector", s.selector}, {"fold", s.fold}};
    sj["importance"] = to_json(s.importance, r.feature_names);
    sj["ranking"] = s.ranking;
    sj["selected"] = json::array();
    for (const auto& [k, idx] : s.selected) sj["selected"].push_back({{"retention", k}, {"indices", idx}});
    if (!s.error.empty()) sj["error"] = s.error;
    j["selections"].push_back(std::move(sj));
  }
  j["aggregates"] = json::array();
  for (const auto& [k, v] : r.aggregates)
    j["aggregates"].push_back(
        {{"selector", std::get<0>(k)}, {"retention", std::get<1>(k)}, {"predictor", std::get<2>(k)}, {"mean", v}});
  j["retention_averages"] = json::array();
  for (const auto& [k, v] : r.retention_averages)
    j["retention_averages"].push_back({{"selector", k.first}, {"predictor", k.second}, {"mean", v}});
  return j;
}

inline BenchmarkReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "kanfs-report/1") throw Error(ErrorCode::config, "not a kanfs report document");
    BenchmarkReport r;
    r.metadata = j.at("metadata");
    r.selectors = j.at("selectors").get<std::vector<std::string>>();
    r.predictors = j.at("predictors").get<std::vector<std::string>>();
    r.retentions = j.at("retentions").get<std::vector<double>>();
    r.folds = j.at("folds").get<int>();
    r.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& cj : j.at("cells")) {
      ScoreCell c;
      c.selector = cj.at("selector");
      c.retention = cj.at("retention");
      c.predictor = cj.at("predictor");
      c.fold = cj.at("fold");
      if (!cj.at("score").is_null()) c.score = cj.at("score").get<double>();
      c.error = cj.value("error", "");
      r.cells.push_back(std::move(c));
    }
    for (const auto& sj : j.at("selections")) {
      SelectionRecord s;
      s.selector = sj.at("selector");
      s.fold = sj.at("fold");
      s.importance = importance_from_json(sj.at("importance"));
      s.ranking = sj.at("ranking").get<std::vector<double>>();
      for (const auto& e : sj.at("selected")) s.selected[e.at("retention").get<double>()] = e.at("indices").get<std::vector<Index>>();
      s.error = sj.value("error", "");
      r.selections.push_back(std::move(s));
    }
    for (const auto& a : j.at("aggregates"))
      r.aggregates[{a.at("selector"), a.at("retention").get<double>(), a.at("predictor")}] = a.at("mean");
    for (const auto& a : j.at("retention_averages"))
      r.retention_averages[{a.at("selector"), a.at("predictor")}] = a.at("mean");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("malformed report: ") + e.what());
  }
}

namespace detail {

inline std::string format_number(double v, const char* fmt = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline std::string retention_text(double k) {
  return k == std::floor(k) ? std::to_string(static_cast<long long>(k)) : format_number(k, "%g");
}

}  // namespace detail

/// One table as CSV; missing cells are left empty.
inline std::string table_csv(const ResultTable& t) {
  std::ostringstream out;
  for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    out << t.row_labels[r];
    for (const auto& v : t.values[r]) out << ',' << (v ? detail::format_number(*v) : "");
    out << '\n';
  }
  return out.str();
}

/// Sample standard deviation over sqrt(count); 0 for fewer than two values.
inline double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

/**
 * Long-format plot data: one row per (selector, predictor, retention) plus a
 * "mean" row per (selector, predictor) averaged over retentions. The error
 * column is the standard error over folds of the plotted quantity.
 */
inline std::string plot_data(const BenchmarkReport& r) {
  std::ostringstream out;
  out << "selector,predictor,retention,mean,stderr,folds\n";
  for (const auto& s : r.selectors)
    for (const auto& p : r.predictors) {
      const bool baseline = s == kAllFeaturesLabel;
      std::map<int, std::pair<double, int>> per_fold;
      const auto levels = baseline ? std::vector<double>{100.0} : r.retentions;
      for (double k : levels) {
        const auto m = r.aggregate(s, k, p);
        if (!m) continue;
        std::vector<double> scores;
        for (const auto& c : r.cells)
          if (c.selector == s && c.retention == k && c.predictor == p && c.score) {
            scores.push_back(*c.score);
            per_fold[c.fold].first += *c.score;
            per_fold[c.fold].second += 1;
          }
        out << s << ',' << p << ',' << detail::retention_text(k) << ',' << detail::format_number(*m, "%.17g") << ','
            << detail::format_number(standard_error(scores), "%.17g") << ',' << scores.size() << '\n';
      }
      const auto it = r.retention_averages.find({s, p});
      if (it == r.retention_averages.end()) continue;
      std::vector<double> fold_means;
      for (const auto& [f, a] : per_fold)
        if (a.second == static_cast<int>(levels.size())) fold_means.push_back(a.first / a.second);
      out << s << ',' << p << ",mean," << detail::format_number(it->second, "%.17g") << ','
          << detail::format_number(standard_error(fold_means), "%.17g") << ',' << fold_means.size() << '\n';
    }
  return out.str();
}

inline std::string emit(const BenchmarkReport& r, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return to_json(r).dump(2) + "\n";
    case ReportFormat::plotdata: return plot_data(r);
    case ReportFormat::csv: {
      std::string out;
      for (std::size_t i = 0; i < r.retentions.size(); ++i) {
        if (i) out += '\n';
        out += "# retention " + detail::retention_text(r.retentions[i]) + "%\n";
        out += table_csv(to_table(r, r.retentions[i]));
      }
      return out;
    }
  }
  return {};
}

}  // namespace kanfs
