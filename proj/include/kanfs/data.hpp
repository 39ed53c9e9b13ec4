#pragma once

// Datasets: CSV ingestion with one-hot encoding, and synthetic generators
// for classification (Gaussian clusters) and regression (sparse linear model).

#include "kanfs/core.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace kanfs {

struct Dataset {
  std::string name;
  Matrix X;
  Vector y;
  Task task;
  std::vector<std::string> feature_names;
  std::map<Index, std::string> onehot_groups;  // encoded column -> source categorical column
  std::vector<std::string> class_names;        // label value c <-> class_names[c]
  std::optional<std::vector<Index>> informative;

  [[nodiscard]] Index rows() const { return X.rows(); }
  [[nodiscard]] Index cols() const { return X.cols(); }

  void validate() const {
    if (X.rows() != y.size()) throw Error(ErrorCode::dimension_mismatch, "feature and target row counts differ");
    if (static_cast<Index>(feature_names.size()) != X.cols())
      throw Error(ErrorCode::dimension_mismatch, "feature name count does not match columns");
    if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::malformed_value, "dataset contains non-finite values");
    std::set<std::string> seen(feature_names.begin(), feature_names.end());
    if (seen.size() != feature_names.size()) throw Error(ErrorCode::malformed_value, "feature names are not unique");
    check_labels(y, task);
  }
};

struct SchemaHints {
  std::string target;
  std::optional<TaskKind> task;            // unset: classification iff the target is non-numeric
  std::vector<std::string> categorical;    // forced categorical columns
  std::vector<std::string> drop;           // ignored columns
};

namespace detail {

// RFC-4180 style record splitting: quoted fields, doubled quotes, CRLF tolerant.
inline std::vector<std::vector<std::string>> parse_csv_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false, field_started = false, any = false;
  char c;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(record);
    record.clear();
  };
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (in.peek() == '\n') continue;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::malformed_value, "unterminated quoted field at end of file");
  if (any && (!field.empty() || !record.empty())) end_record();
  return records;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/**
 * Parses a CSV with a header row. Columns whose values never parse as
 * numbers (or that are hinted categorical) are one-hot encoded with levels in
 * sorted order; every encoded column is recorded in `onehot_groups`. Empty or
 * unparseable numeric cells are rejected with the 1-based file line number.
 */
inline Dataset parse_csv(std::istream& in, const SchemaHints& hints, std::string name = "csv") {
  const auto records = detail::parse_csv_records(in);
  if (records.empty()) throw Error(ErrorCode::empty_file, "no header row");
  const auto& header = records.front();
  if (records.size() < 2) throw Error(ErrorCode::empty_file, "no data rows");
  const std::size_t width = header.size();
  std::vector<std::string> names;
  for (const auto& h : header) names.push_back(detail::trim(h));

  auto find_col = [&](const std::string& n) -> std::optional<std::size_t> {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  };
  const auto target = find_col(hints.target);
  if (!target) throw Error(ErrorCode::missing_target, "target column '" + hints.target + "' not in header");
  for (const auto& d : hints.drop)
    if (!find_col(d)) throw Error(ErrorCode::config, "drop column '" + d + "' not in header");
  for (const auto& c : hints.categorical)
    if (!find_col(c)) throw Error(ErrorCode::config, "categorical column '" + c + "' not in header");

  for (std::size_t r = 1; r < records.size(); ++r)
    if (records[r].size() != width)
      throw Error(ErrorCode::inconsistent_column_count, "line " + std::to_string(r + 1) + " has " +
                                                            std::to_string(records[r].size()) + " fields, header has " +
                                                            std::to_string(width));

  const std::size_t n = records.size() - 1;
  std::vector<bool> categorical(width, false);
  for (std::size_t c = 0; c < width; ++c) {
    if (std::find(hints.categorical.begin(), hints.categorical.end(), names[c]) != hints.categorical.end()) {
      categorical[c] = true;
      continue;
    }
    bool any_numeric = false;
    for (std::size_t r = 1; r <= n && !any_numeric; ++r) any_numeric = detail::parse_number(records[r][c]).has_value();
    categorical[c] = !any_numeric;
  }

  Dataset ds;
  ds.name = std::move(name);
  const bool classification = hints.task ? *hints.task == TaskKind::classification : categorical[*target];

  // Target
  ds.y.resize(static_cast<Index>(n));
  if (classification) {
    std::vector<std::string> labels;
    for (std::size_t r = 1; r <= n; ++r) {
      const auto v = detail::trim(records[r][*target]);
      if (v.empty()) throw Error(ErrorCode::malformed_value, "line " + std::to_string(r + 1) + ": empty target");
      labels.push_back(v);
    }
    std::vector<std::string> levels(labels.begin(), labels.end());
    std::sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
      const auto na = detail::parse_number(a), nb = detail::parse_number(b);
      if (na && nb && *na != *nb) return *na < *nb;
      return a < b;
    });
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (std::size_t r = 0; r < n; ++r)
      ds.y[static_cast<Index>(r)] =
          static_cast<double>(std::find(levels.begin(), levels.end(), labels[r]) - levels.begin());
    ds.class_names = levels;
    ds.task = Task::classification(static_cast<int>(levels.size()));
    if (levels.size() < 2) throw Error(ErrorCode::malformed_value, "classification target has a single class");
  } else {
    for (std::size_t r = 1; r <= n; ++r) {
      const auto v = detail::parse_number(records[r][*target]);
      if (!v)
        throw Error(ErrorCode::malformed_value, "line " + std::to_string(r + 1) + ": target value '" +
                                                    records[r][*target] + "' is not numeric");
      ds.y[static_cast<Index>(r - 1)] = *v;
    }
    ds.task = Task::regression();
  }

  // Features
  std::vector<std::vector<double>> columns;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == *target) continue;
    if (std::find(hints.drop.begin(), hints.drop.end(), names[c]) != hints.drop.end()) continue;
    if (!categorical[c]) {
      std::vector<double> col(n);
      for (std::size_t r = 1; r <= n; ++r) {
        const auto v = detail::parse_number(records[r][c]);
        if (!v)
          throw Error(ErrorCode::malformed_value, "line " + std::to_string(r + 1) + ", column '" + names[c] +
                                                      "': cannot parse '" + records[r][c] + "' as a number");
        col[r - 1] = *v;
      }
      ds.feature_names.push_back(names[c]);
      columns.push_back(std::move(col));
      continue;
    }
    std::set<std::string> levels;
    for (std::size_t r = 1; r <= n; ++r) {
      const auto v = detail::trim(records[r][c]);
      if (v.empty())
        throw Error(ErrorCode::malformed_value, "line " + std::to_string(r + 1) + ", column '" + names[c] +
                                                    "': missing categorical value");
      levels.insert(v);
    }
    for (const auto& level : levels) {
      std::vector<double> col(n);
      for (std::size_t r = 1; r <= n; ++r) col[r - 1] = detail::trim(records[r][c]) == level ? 1.0 : 0.0;
      ds.onehot_groups[static_cast<Index>(columns.size())] = names[c];
      ds.feature_names.push_back(names[c] + "=" + level);
      columns.push_back(std::move(col));
    }
  }
  if (columns.empty()) throw Error(ErrorCode::invalid_dims, "no feature columns left after target/drop removal");
  ds.X.resize(static_cast<Index>(n), static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c)
    for (std::size_t r = 0; r < n; ++r) ds.X(static_cast<Index>(r), static_cast<Index>(c)) = columns[c][r];
  ds.validate();
  return ds;
}

inline Dataset load_csv(const std::string& path, const SchemaHints& hints) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  auto name = path.substr(path.find_last_of("/\\") == std::string::npos ? 0 : path.find_last_of("/\\") + 1);
  return parse_csv(in, hints, name);
}

/// Writes features then the target (named `target`) as CSV with full double precision.
inline void write_csv(std::ostream& out, const Dataset& ds, const std::string& target = "target") {
  for (const auto& n : ds.feature_names) out << n << ',';
  out << target << '\n';
  char buf[32];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
  };
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < ds.cols(); ++j) {
      put(ds.X(i, j));
      out << ',';
    }
    if (ds.task.is_classification())
      out << static_cast<int>(ds.y[i]);
    else
      put(ds.y[i]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic generators

struct ClassificationSpec {
  Index n = 500;
  Index d = 10;
  Index n_informative = 5;
  int n_classes = 2;
  double class_sep = 1.0;
  std::uint64_t seed = 0;
};

struct RegressionSpec {
  Index n = 500;
  Index d = 10;
  Index n_informative = 5;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<Index> shuffled_columns(Index d, Rng& rng) {
  auto cols = iota_indices(d);
  std::shuffle(cols.begin(), cols.end(), rng);
  return cols;
}

inline void check_dims(Index n, Index d, Index informative) {
  if (n < 1 || d < 1 || informative < 1 || informative > d)
    throw Error(ErrorCode::invalid_dims, "need n >= 1 and 1 <= n_informative <= d");
}

inline std::vector<std::string> default_names(Index d) {
  std::vector<std::string> names;
  for (Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace detail

/**
 * Class-conditional Gaussian clusters. Each class gets a centroid on the
 * vertices of a hypercube of side 2*class_sep over the informative dims (every
 * informative dim separates at least two classes); samples add unit normal
 * noise. Remaining dims are pure N(0,1). Classes are balanced and the
 * informative dims are placed at seeded random column positions.
 */
inline Dataset make_classification(const ClassificationSpec& s) {
  detail::check_dims(s.n, s.d, s.n_informative);
  if (s.n_classes < 2) throw Error(ErrorCode::invalid_dims, "need at least 2 classes");
  Rng rng(s.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Matrix centroids(s.n_classes, s.n_informative);
  for (Index k = 0; k < s.n_informative; ++k) {
    bool varied = false;
    while (!varied) {
      for (int c = 0; c < s.n_classes; ++c) centroids(c, k) = coin(rng) ? s.class_sep : -s.class_sep;
      varied = (centroids.col(k).array() != centroids(0, k)).any();
    }
  }
  const auto positions = detail::shuffled_columns(s.d, rng);
  std::vector<Index> labels(static_cast<std::size_t>(s.n));
  for (Index i = 0; i < s.n; ++i) labels[static_cast<std::size_t>(i)] = i % s.n_classes;
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset ds;
  ds.name = "make_classification";
  ds.task = Task::classification(s.n_classes);
  ds.X.resize(s.n, s.d);
  ds.y.resize(s.n);
  for (Index i = 0; i < s.n; ++i) {
    const Index c = labels[static_cast<std::size_t>(i)];
    ds.y[i] = static_cast<double>(c);
    for (Index k = 0; k < s.d; ++k) {
      const double v = normal(rng) + (k < s.n_informative ? centroids(c, k) : 0.0);
      ds.X(i, positions[static_cast<std::size_t>(k)]) = v;
    }
  }
  std::vector<Index> informative(positions.begin(), positions.begin() + s.n_informative);
  std::sort(informative.begin(), informative.end());
  ds.informative = informative;
  ds.feature_names = detail::default_names(s.d);
  for (int c = 0; c < s.n_classes; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

/// y = X w + noise with X ~ N(0, I), w_j ~ 100 * U(0, 1) on the informative dims and 0 elsewhere.
inline Dataset make_regression(const RegressionSpec& s) {
  detail::check_dims(s.n, s.d, s.n_informative);
  if (!(s.noise_sd >= 0.0)) throw Error(ErrorCode::invalid_dims, "noise_sd must be >= 0");
  Rng rng(s.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto positions = detail::shuffled_columns(s.d, rng);
  Vector w = Vector::Zero(s.d);
  for (Index k = 0; k < s.n_informative; ++k) w[positions[static_cast<std::size_t>(k)]] = 100.0 * unif(rng);

  Dataset ds;
  ds.name = "make_regression";
  ds.task = Task::regression();
  ds.X.resize(s.n, s.d);
  for (Index i = 0; i < s.n; ++i)
    for (Index j = 0; j < s.d; ++j) ds.X(i, j) = normal(rng);
  ds.y = ds.X * w;
  if (s.noise_sd > 0.0)
    for (Index i = 0; i < s.n; ++i) ds.y[i] += s.noise_sd * normal(rng);
  std::vector<Index> informative(positions.begin(), positions.begin() + s.n_informative);
  std::sort(informative.begin(), informative.end());
  ds.informative = informative;
  ds.feature_names = detail::default_names(s.d);
  return ds;
}

}  // namespace kanfs
