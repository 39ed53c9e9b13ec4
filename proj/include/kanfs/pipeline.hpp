#pragma once

// Cross-validated selection-to-prediction benchmark. Preprocessing and
// selectors are fitted on the training rows of each fold only; predictors
// are trained on the projected training rows and scored on the projected
// validation rows.

#include "kanfs/data.hpp"
#include "kanfs/report.hpp"
#include "kanfs/selectors.hpp"

#include <atomic>
#include <functional>
#include <thread>

namespace kanfs {

struct Fold {
  std::vector<Index> train;
  std::vector<Index> validation;

  friend bool operator==(const Fold&, const Fold&) = default;
};

struct FoldPlan {
  int n_folds = 0;
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
  bool stratified = false;

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/**
 * Shuffled F-fold partition. Classification plans are stratified: each
 * class is shuffled and dealt round-robin, continuing the deal position
 * across classes, so fold sizes differ by at most one overall and per class.
 */
inline FoldPlan plan_folds(Index n, int F, const Task& task, const Vector& y, std::uint64_t seed) {
  if (F < 2) throw Error(ErrorCode::precondition, "need at least 2 folds");
  if (n < F) throw Error(ErrorCode::too_few_samples, "fewer rows than folds");
  if (y.size() != n) throw Error(ErrorCode::dimension_mismatch, "plan_folds: target length differs from n");
  Rng rng(seed);
  std::vector<std::vector<Index>> groups;
  if (task.is_classification()) {
    check_labels(y, task);
    groups.resize(static_cast<std::size_t>(task.n_classes));
    for (Index i = 0; i < n; ++i) groups[static_cast<std::size_t>(y[i])].push_back(i);
  } else {
    groups.push_back(iota_indices(n));
  }
  FoldPlan plan;
  plan.n_folds = F;
  plan.seed = seed;
  plan.stratified = task.is_classification();
  plan.folds.resize(static_cast<std::size_t>(F));
  std::size_t deal = 0;
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    for (Index i : g) plan.folds[deal++ % static_cast<std::size_t>(F)].validation.push_back(i);
  }
  for (auto& f : plan.folds) {
    std::sort(f.validation.begin(), f.validation.end());
    std::vector<bool> held(static_cast<std::size_t>(n), false);
    for (Index i : f.validation) held[static_cast<std::size_t>(i)] = true;
    for (Index i = 0; i < n; ++i)
      if (!held[static_cast<std::size_t>(i)]) f.train.push_back(i);
  }
  return plan;
}

/// Number of features kept at retention `k_percent`: max(1, ceil(k d / 100)).
inline Index retention_count(double k_percent, Index d) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw Error(ErrorCode::invalid_range, "retention must be in (0, 100]");
  const auto n = static_cast<Index>(std::ceil(k_percent * static_cast<double>(d) / 100.0 - 1e-9));
  return std::clamp<Index>(n, 1, d);
}

/// Indices of the n_k largest scores, ties to the lower index, returned ascending.
inline std::vector<Index> top_k(const std::vector<double>& scores, Index n_k) {
  if (n_k < 0 || n_k > static_cast<Index>(scores.size()))
    throw Error(ErrorCode::invalid_range, "top_k: n_k outside [0, d]");
  auto idx = iota_indices(static_cast<Index>(scores.size()));
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  idx.resize(static_cast<std::size_t>(n_k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Matrix project(const Matrix& X, const std::vector<Index>& columns) {
  Matrix out(X.rows(), static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] < 0 || columns[c] >= X.cols()) throw Error(ErrorCode::index_out_of_range, "project: bad column");
    out.col(static_cast<Index>(c)) = X.col(columns[c]);
  }
  return out;
}

/// Training and validation features of one fold, standardized with training statistics.
struct PreparedFold {
  DataSlice train;
  DataSlice validation;
};

inline PreparedFold prepare_fold(const Dataset& ds, const Fold& fold) {
  PreparedFold p;
  const Matrix Xt = take_rows(ds.X, fold.train);
  const Standardizer st = Standardizer::fit(Xt);
  p.train = {st.apply(Xt), take_rows(ds.y, fold.train), Provenance::fit};
  p.validation = {st.apply(take_rows(ds.X, fold.validation)), take_rows(ds.y, fold.validation), Provenance::validation};
  return p;
}

inline std::uint64_t selector_seed(std::uint64_t seed, const SelectorSpec& s, int fold) {
  return derive_seed(seed, {hash_string("selector"), hash_string(to_string(s.kind)), static_cast<std::uint64_t>(fold)});
}

inline std::uint64_t predictor_seed(std::uint64_t seed, const PredictorSpec& p, int fold) {
  return derive_seed(seed,
                     {hash_string("predictor"), hash_string(to_string(p.kind)), static_cast<std::uint64_t>(fold)});
}

/**
 * Runs one selector on one fold and records the selected columns for every
 * retention level. Only the fold's training rows are read.
 */
inline SelectionRecord select_features(const Dataset& ds, const FoldPlan& plan, int fold, const SelectorSpec& spec,
                                       const std::vector<double>& retentions, std::uint64_t seed) {
  const auto& f = plan.folds.at(static_cast<std::size_t>(fold));
  const Matrix Xt = take_rows(ds.X, f.train);
  const DataSlice train{Standardizer::fit(Xt).apply(Xt), take_rows(ds.y, f.train), Provenance::fit};
  SelectionRecord rec;
  rec.selector = selector_label(spec.kind);
  rec.fold = fold;
  auto res = run_selector(spec, train, ds.task, ds.onehot_groups, selector_seed(seed, spec, fold));
  rec.importance = std::move(res.importance);
  rec.ranking = std::move(res.ranking);
  for (double k : retentions) rec.selected[k] = top_k(rec.ranking, retention_count(k, ds.cols()));
  return rec;
}

inline double score_predictor(const PredictorSpec& spec, const Task& task, const PreparedFold& data,
                              const std::vector<Index>& columns, std::uint64_t seed) {
  const auto model = fit(spec, task, project(data.train.X, columns), data.train.y, seed);
  return task_score(task, data.validation.y, predict(model, project(data.validation.X, columns)));
}

struct BenchmarkConfig {
  std::vector<SelectorSpec> selectors = default_selectors();
  std::vector<PredictorSpec> predictors = {{PredictorKind::linear, {}},
                                           {PredictorKind::random_forest, {}},
                                           {PredictorKind::gradient_boosted_trees, {}}};
  std::vector<double> retentions = {20.0, 40.0, 60.0};
  int folds = 5;
  std::uint64_t seed = 0;
  bool baseline = true;  // add the all-features passthrough at 100%
  int workers = 1;

  void validate() const {
    if (selectors.empty() && !baseline) throw Error(ErrorCode::config, "no selectors configured");
    if (predictors.empty()) throw Error(ErrorCode::config, "no predictors configured");
    if (retentions.empty()) throw Error(ErrorCode::config, "no retention levels configured");
    for (double k : retentions)
      if (!(k > 0.0 && k <= 100.0)) throw Error(ErrorCode::config, "retentions must lie in (0, 100]");
    if (folds < 2) throw Error(ErrorCode::config, "folds must be >= 2");
    if (workers < 1) throw Error(ErrorCode::config, "workers must be >= 1");
    std::set<SelectorKind> seen_s;
    for (const auto& s : selectors)
      if (!seen_s.insert(s.kind).second) throw Error(ErrorCode::config, "duplicate selector in roster");
    std::set<PredictorKind> seen_p;
    for (const auto& p : predictors)
      if (!seen_p.insert(p.kind).second) throw Error(ErrorCode::config, "duplicate predictor in roster");
  }
};

/// Runs `jobs` tasks on `workers` threads; tasks write only to their own slots.
inline void parallel_for(std::size_t jobs, int workers, const std::function<void(std::size_t)>& task) {
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), jobs);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) task(i);
    });
  for (auto& th : pool) th.join();
}

/**
 * Full benchmark grid on `ds`. Each (selector, fold) pair is an independent
 * job; results land in fixed slots so the report does not depend on the
 * worker count. Failures are recorded per cell and the run continues.
 */
inline BenchmarkReport run_benchmark(const Dataset& ds, const BenchmarkConfig& cfg) {
  cfg.validate();
  ds.validate();
  const FoldPlan plan = plan_folds(ds.rows(), cfg.folds, ds.task, ds.y, derive_seed(cfg.seed, {hash_string("folds")}));

  std::vector<SelectorSpec> roster;
  if (cfg.baseline) roster.push_back({SelectorKind::all_features, nlohmann::json::object()});
  roster.insert(roster.end(), cfg.selectors.begin(), cfg.selectors.end());

  std::vector<PreparedFold> prepared;
  for (const auto& f : plan.folds) prepared.push_back(prepare_fold(ds, f));

  const std::size_t F = plan.folds.size();
  std::vector<SelectionRecord> selections(roster.size() * F);
  std::vector<std::vector<ScoreCell>> cells(roster.size() * F);
  parallel_for(roster.size() * F, cfg.workers, [&](std::size_t job) {
    const auto& spec = roster[job / F];
    const int fold = static_cast<int>(job % F);
    const bool baseline = spec.kind == SelectorKind::all_features;
    const std::vector<double> levels = baseline ? std::vector<double>{100.0} : cfg.retentions;
    SelectionRecord rec;
    try {
      rec = select_features(ds, plan, fold, spec, levels, cfg.seed);
    } catch (const std::exception& e) {
      rec.selector = selector_label(spec.kind);
      rec.fold = fold;
      rec.error = e.what();
    }
    auto& out = cells[job];
    for (double k : levels)
      for (const auto& p : cfg.predictors) {
        ScoreCell c{rec.selector, k, predictor_label(p.kind, ds.task), fold, std::nullopt, rec.error};
        if (rec.error.empty()) {
          try {
            c.score = score_predictor(p, ds.task, prepared[static_cast<std::size_t>(fold)], rec.selected.at(k),
                                      predictor_seed(cfg.seed, p, fold));
          } catch (const std::exception& e) {
            c.error = e.what();
          }
        }
        out.push_back(std::move(c));
      }
    selections[job] = std::move(rec);
  });

  BenchmarkReport report;
  report.metadata = {{"dataset", ds.name},
                     {"task", std::string(to_string(ds.task.kind))},
                     {"n_classes", ds.task.n_classes},
                     {"rows", ds.rows()},
                     {"columns", ds.cols()},
                     {"seed", cfg.seed}};
  for (const auto& s : roster) report.selectors.push_back(selector_label(s.kind));
  for (const auto& p : cfg.predictors) report.predictors.push_back(predictor_label(p.kind, ds.task));
  report.retentions = cfg.retentions;
  report.folds = cfg.folds;
  report.feature_names = ds.feature_names;
  for (auto& c : cells)
    for (auto& cell : c) report.cells.push_back(std::move(cell));
  report.selections = std::move(selections);
  report.finalize();
  return report;
}

}  // namespace kanfs
