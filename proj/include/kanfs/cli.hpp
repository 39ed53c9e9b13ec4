#pragma once

// Command-line surface: rank, benchmark, generate, inspect-model.
// A run is described by one JSON config; flags override scalar fields only.

#include "kanfs/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace kanfs {

struct DatasetSource {
  std::string csv;  // empty: synthetic
  SchemaHints hints;
  TaskKind synthetic_task = TaskKind::regression;
  Index n = 500;
  Index d = 10;
  Index n_informative = 5;
  int n_classes = 2;
  double class_sep = 1.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  DatasetSource dataset;
  BenchmarkConfig benchmark;
  std::string out_dir = "results";
  std::optional<int> workers;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::config, field + ": " + what);
}

// Message of a wrapped error without its code prefix.
inline std::string bare_message(const Error& e) {
  const std::string w = e.what();
  const auto prefix = std::string(to_string(e.code())) + ": ";
  return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

template <class T>
T field(const nlohmann::json& obj, const std::string& key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(path + "." + key, "wrong type");
  }
}

inline void check_keys(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) config_error(path + "." + key, "unknown field");
  }
}

inline TaskKind task_kind_from_string(const std::string& s, const std::string& path) {
  if (s == "regression") return TaskKind::regression;
  if (s == "classification") return TaskKind::classification;
  config_error(path, "expected 'regression' or 'classification'");
}

// A roster entry is either a bare name or {"kind": name, "hyperparameters": {...}}.
template <class Kind, class Parse>
std::pair<Kind, nlohmann::json> roster_entry(const nlohmann::json& e, const std::string& path, Parse parse) {
  std::string name;
  nlohmann::json hp = nlohmann::json::object();
  if (e.is_string()) {
    name = e.get<std::string>();
  } else {
    check_keys(e, path, {"kind", "hyperparameters"});
    if (!e.contains("kind") || !e["kind"].is_string()) config_error(path + ".kind", "missing or not a string");
    name = e["kind"].get<std::string>();
    hp = e.value("hyperparameters", nlohmann::json::object());
    if (!hp.is_object()) config_error(path + ".hyperparameters", "expected an object");
  }
  try {
    return {parse(name), hp};
  } catch (const Error& err) {
    config_error(path + ".kind", bare_message(err));
  }
}

inline int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::config_error;
  using detail::field;
  detail::check_keys(j, "config",
                     {"dataset", "selectors", "predictors", "retentions", "folds", "seed", "baseline", "workers", "output"});
  RunConfig rc;
  if (!j.contains("dataset")) config_error("config.dataset", "missing");
  const auto& d = j["dataset"];
  detail::check_keys(d, "dataset", {"csv", "target", "task", "categorical", "drop", "synthetic", "n", "d", "n_informative",
                                    "n_classes", "class_sep", "noise_sd", "seed"});
  auto& src = rc.dataset;
  if (d.contains("csv") == d.contains("synthetic")) config_error("dataset", "set exactly one of 'csv' or 'synthetic'");
  if (d.contains("csv")) {
    src.csv = field<std::string>(d, "csv", "dataset", "");
    src.hints.target = field<std::string>(d, "target", "dataset", "");
    if (src.hints.target.empty()) config_error("dataset.target", "missing");
    if (d.contains("task"))
      src.hints.task = detail::task_kind_from_string(field<std::string>(d, "task", "dataset", ""), "dataset.task");
    src.hints.categorical = field<std::vector<std::string>>(d, "categorical", "dataset", {});
    src.hints.drop = field<std::vector<std::string>>(d, "drop", "dataset", {});
  } else {
    src.synthetic_task =
        detail::task_kind_from_string(field<std::string>(d, "synthetic", "dataset", ""), "dataset.synthetic");
    src.n = field<Index>(d, "n", "dataset", src.n);
    src.d = field<Index>(d, "d", "dataset", src.d);
    src.n_informative = field<Index>(d, "n_informative", "dataset", src.n_informative);
    src.n_classes = field<int>(d, "n_classes", "dataset", src.n_classes);
    src.class_sep = field<double>(d, "class_sep", "dataset", src.class_sep);
    src.noise_sd = field<double>(d, "noise_sd", "dataset", src.noise_sd);
    src.seed = field<std::uint64_t>(d, "seed", "dataset", src.seed);
  }

  auto& b = rc.benchmark;
  if (j.contains("selectors")) {
    if (!j["selectors"].is_array()) config_error("config.selectors", "expected an array");
    b.selectors.clear();
    for (std::size_t i = 0; i < j["selectors"].size(); ++i) {
      auto [k, hp] = detail::roster_entry<SelectorKind>(j["selectors"][i], "selectors[" + std::to_string(i) + "]",
                                                        selector_kind_from_string);
      if (k == SelectorKind::all_features) config_error("selectors", "the all-features baseline is set by 'baseline'");
      b.selectors.push_back({k, hp});
    }
  }
  if (j.contains("predictors")) {
    if (!j["predictors"].is_array()) config_error("config.predictors", "expected an array");
    b.predictors.clear();
    for (std::size_t i = 0; i < j["predictors"].size(); ++i) {
      auto [k, hp] = detail::roster_entry<PredictorKind>(j["predictors"][i], "predictors[" + std::to_string(i) + "]",
                                                         predictor_kind_from_string);
      b.predictors.push_back({k, hp});
    }
  }
  b.retentions = field<std::vector<double>>(j, "retentions", "config", b.retentions);
  b.folds = field<int>(j, "folds", "config", b.folds);
  b.seed = field<std::uint64_t>(j, "seed", "config", b.seed);
  b.baseline = field<bool>(j, "baseline", "config", b.baseline);
  if (j.contains("workers")) rc.workers = field<int>(j, "workers", "config", 1);
  if (j.contains("output")) {
    detail::check_keys(j["output"], "output", {"dir"});
    rc.out_dir = field<std::string>(j["output"], "dir", "output", rc.out_dir);
  }
  if (b.selectors.empty()) config_error("config.selectors", "at least one selector is required");
  b.workers = 1;
  try {
    b.validate();
  } catch (const Error& e) {
    config_error("config", detail::bare_message(e));
  }
  return rc;
}

/// Canonical form of everything that affects results.
inline nlohmann::json effective_config(const RunConfig& rc) {
  nlohmann::json d;
  const auto& s = rc.dataset;
  if (!s.csv.empty()) {
    d = {{"csv", s.csv}, {"target", s.hints.target}, {"categorical", s.hints.categorical}, {"drop", s.hints.drop}};
    if (s.hints.task) d["task"] = std::string(to_string(*s.hints.task));
  } else {
    d = {{"synthetic", std::string(to_string(s.synthetic_task))},
         {"n", s.n},
         {"d", s.d},
         {"n_informative", s.n_informative},
         {"seed", s.seed}};
    if (s.synthetic_task == TaskKind::classification) {
      d["n_classes"] = s.n_classes;
      d["class_sep"] = s.class_sep;
    } else {
      d["noise_sd"] = s.noise_sd;
    }
  }
  nlohmann::json sel = nlohmann::json::array(), pred = nlohmann::json::array();
  for (const auto& x : rc.benchmark.selectors)
    sel.push_back({{"kind", std::string(to_string(x.kind))}, {"hyperparameters", x.hyperparameters}});
  for (const auto& x : rc.benchmark.predictors)
    pred.push_back({{"kind", std::string(to_string(x.kind))}, {"hyperparameters", x.hyperparameters}});
  return {{"dataset", d},
          {"selectors", sel},
          {"predictors", pred},
          {"retentions", rc.benchmark.retentions},
          {"folds", rc.benchmark.folds},
          {"seed", rc.benchmark.seed},
          {"baseline", rc.benchmark.baseline}};
}

inline std::string config_hash(const RunConfig& rc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash_string(effective_config(rc).dump())));
  return buf;
}

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::config,
                "config line " + std::to_string(detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " +
                    e.what());
  }
  return run_config_from_json(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::config, detail::bare_message(e));
  }
  return parse_run_config(text);
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
}

inline Dataset load_dataset(const DatasetSource& s) {
  if (!s.csv.empty()) return load_csv(s.csv, s.hints);
  if (s.synthetic_task == TaskKind::classification)
    return make_classification({s.n, s.d, s.n_informative, s.n_classes, s.class_sep, s.seed});
  return make_regression({s.n, s.d, s.n_informative, s.noise_sd, s.seed});
}

/// Worker count: explicit value, else KANFS_WORKERS, else the processor count.
inline int resolve_workers(std::optional<int> requested) {
  if (requested) {
    if (*requested < 1) throw Error(ErrorCode::config, "workers must be >= 1");
    return *requested;
  }
  if (const char* env = std::getenv("KANFS_WORKERS"); env && *env) {
    const auto v = detail::parse_number(env);
    if (!v || *v < 1 || *v != std::floor(*v)) throw Error(ErrorCode::config, "KANFS_WORKERS must be a positive integer");
    return static_cast<int>(*v);
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

inline std::uint64_t rank_seed(std::uint64_t seed, const SelectorSpec& s) {
  return derive_seed(seed, {hash_string("rank"), hash_string(to_string(s.kind))});
}

/// Importance documents for every selector, each fitted on the full standardized dataset.
inline std::vector<std::pair<std::string, nlohmann::json>> rank_documents(const RunConfig& rc, const Dataset& ds) {
  const std::string hash = config_hash(rc);
  const DataSlice all{Standardizer::fit(ds.X).apply(ds.X), ds.y, Provenance::fit};
  std::vector<std::pair<std::string, nlohmann::json>> docs(rc.benchmark.selectors.size());
  parallel_for(docs.size(), rc.benchmark.workers, [&](std::size_t i) {
    const auto& spec = rc.benchmark.selectors[i];
    const auto res = run_selector(spec, all, ds.task, ds.onehot_groups, rank_seed(rc.benchmark.seed, spec));
    auto j = to_json(res.importance, ds.feature_names);
    j["label"] = selector_label(spec.kind);
    j["ranking"] = res.ranking;
    j["cross_validated"] = false;
    j["fitted_on"] = "full dataset";
    j["dataset"] = ds.name;
    j["config_hash"] = hash;
    docs[i] = {std::string(to_string(spec.kind)), std::move(j)};
  });
  return docs;
}

inline BenchmarkReport benchmark_report(const RunConfig& rc, const Dataset& ds) {
  auto report = run_benchmark(ds, rc.benchmark);
  report.metadata["config_hash"] = config_hash(rc);
  report.metadata["config"] = effective_config(rc);
  return report;
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::config:
    case ErrorCode::missing_target:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

inline std::string describe_model(const KanModel& m) {
  std::ostringstream out;
  out << "task: " << to_string(m.task.kind);
  if (m.task.is_classification()) out << " (" << m.task.n_classes << " classes)";
  out << "\nlayers: " << m.layers.size() << "\n";
  for (std::size_t t = 0; t < m.layers.size(); ++t) {
    const auto& L = m.layers[t];
    out << "  layer " << t << ": " << L.in_dim() << " -> " << L.out_dim() << ", degree " << L.knots.front().degree()
        << ", grid intervals " << L.basis_size() - L.knots.front().degree() << ", activation " << to_string(L.activation) << "\n";
  }
  return out.str();
}

inline std::string describe_importance(const ImportanceVector& iv, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "selector: " << iv.selector << (iv.all_zero ? " (all zero)" : "") << "\n";
  auto order = iota_indices(static_cast<Index>(iv.scores.size()));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return iv.scores[static_cast<std::size_t>(a)] > iv.scores[static_cast<std::size_t>(b)];
  });
  for (Index j : order) {
    const auto u = static_cast<std::size_t>(j);
    out << "  " << (u < names.size() ? names[u] : "x" + std::to_string(j)) << "  " << detail::format_number(iv.scores[u], "%.6f")
        << "\n";
  }
  return out.str();
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Feature selection with Kolmogorov-Arnold networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds, workers;
  std::string model_out;
  auto common = [&](CLI::App* c) {
    c->add_option("config", config_path, "run config (JSON)")->required();
    c->add_option("--seed", seed, "override the run seed");
    c->add_option("--folds", folds, "override the fold count");
    c->add_option("--workers", workers, "worker threads (default: KANFS_WORKERS or processor count)");
    c->add_option("--out-dir", out_dir, "override the output directory");
  };
  auto* rank = app.add_subcommand("rank", "importance of every selector on the full dataset (not cross-validated)");
  common(rank);
  rank->add_option("--save-model", model_out, "also write a KAN fitted on the full dataset");
  auto* bench = app.add_subcommand("benchmark", "cross-validated selection-to-prediction benchmark");
  common(bench);

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset and its informative-feature sidecar");
  std::string gen_task = "classification", gen_out;
  Index gen_n = 500, gen_d = 10, gen_inf = 5;
  int gen_classes = 2;
  double gen_sep = 1.0, gen_noise = 0.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--task", gen_task)->check(CLI::IsMember({"classification", "regression"}));
  gen->add_option("--n", gen_n);
  gen->add_option("--d", gen_d);
  gen->add_option("--informative", gen_inf);
  gen->add_option("--classes", gen_classes);
  gen->add_option("--class-sep", gen_sep);
  gen->add_option("--noise", gen_noise);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out, "CSV path")->required();

  auto* inspect = app.add_subcommand("inspect-model", "summarize a saved KAN model or importance document");
  std::string inspect_path;
  inspect->add_option("file", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      Dataset ds = gen_task == "classification"
                       ? make_classification({gen_n, gen_d, gen_inf, gen_classes, gen_sep, gen_seed})
                       : make_regression({gen_n, gen_d, gen_inf, gen_noise, gen_seed});
      std::ostringstream csv;
      write_csv(csv, ds);
      write_file(gen_out, csv.str());
      const std::filesystem::path sidecar = std::filesystem::path(gen_out).replace_extension(".informative.json");
      nlohmann::json side = {{"informative", *ds.informative},
                             {"feature_names", ds.feature_names},
                             {"task", std::string(to_string(ds.task.kind))},
                             {"target", "target"},
                             {"seed", gen_seed}};
      write_file(sidecar, side.dump(2) + "\n");
      out << "wrote " << gen_out << " and " << sidecar.string() << "\n";
      return kExitOk;
    }
    if (*inspect) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(inspect_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::malformed_value, inspect_path + ": " + e.what());
      }
      if (j.contains("layers")) {
        const auto m = model_from_json(j);
        out << describe_model(m);
        const auto names = j.value("feature_names", std::vector<std::string>{});
        out << describe_importance(importance_l2(m), names);
      } else if (j.contains("scores")) {
        out << describe_importance(importance_from_json(j), j.value("feature_names", std::vector<std::string>{}));
      } else {
        throw Error(ErrorCode::malformed_value, inspect_path + ": neither a model nor an importance document");
      }
      return kExitOk;
    }

    RunConfig rc = load_run_config(config_path);
    if (seed) rc.benchmark.seed = *seed;
    if (folds) rc.benchmark.folds = *folds;
    if (!out_dir.empty()) rc.out_dir = out_dir;
    rc.benchmark.workers = resolve_workers(workers ? workers : rc.workers);
    try {
      rc.benchmark.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::config, detail::bare_message(e));
    }
    const Dataset ds = load_dataset(rc.dataset);
    const std::filesystem::path dir(rc.out_dir);

    if (*rank) {
      for (const auto& [name, doc] : rank_documents(rc, ds)) write_file(dir / "rank" / (name + ".json"), doc.dump(2) + "\n");
      if (!model_out.empty()) {
        nlohmann::json hp = nlohmann::json::object();
        for (const auto& s : rc.benchmark.selectors)
          if (s.kind == SelectorKind::kan_l2) hp = s.hyperparameters;
        const Matrix Xs = Standardizer::fit(ds.X).apply(ds.X);
        auto j = to_json(detail::fit_kan(kan_selector_config(hp), Xs, ds.y, ds.task,
                                         rank_seed(rc.benchmark.seed, {SelectorKind::kan_l2, hp}))
                             .model);
        j["feature_names"] = ds.feature_names;
        j["config_hash"] = config_hash(rc);
        write_file(model_out, j.dump(2) + "\n");
      }
      out << "wrote " << rc.benchmark.selectors.size() << " importance documents to " << (dir / "rank").string() << "\n";
      return kExitOk;
    }

    const auto report = benchmark_report(rc, ds);
    write_file(dir / "report.json", emit(report, ReportFormat::json));
    write_file(dir / "tables.csv", emit(report, ReportFormat::csv));
    write_file(dir / "plotdata.csv", emit(report, ReportFormat::plotdata));
    const auto failed = report.failed_cells();
    out << "wrote " << report.cells.size() << " cells (" << failed << " failed) to " << dir.string() << "\n";
    if (failed == report.cells.size()) {
      err << "error: every cell failed; first error: " << report.cells.front().error << "\n";
      return kExitRuntime;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace kanfs
