#pragma once

#include "kanfs/core.hpp"

#include <nlohmann/json.hpp>

#include <numeric>

namespace kanfs {

/// Nonnegative per-feature scores, normalized to sum to one unless every raw score is zero.
struct ImportanceVector {
  std::string selector;
  std::vector<double> scores;
  std::vector<double> raw_scores;
  bool normalized = false;
  bool all_zero = false;
  std::vector<std::string> flags;
  nlohmann::json config = nlohmann::json::object();

  [[nodiscard]] std::size_t size() const noexcept { return scores.size(); }
  [[nodiscard]] bool has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }

  friend bool operator==(const ImportanceVector&, const ImportanceVector&) = default;
};

/// Sum-normalizes `raw`; negative or non-finite raw entries are treated as zero.
inline ImportanceVector make_importance(std::string selector, std::vector<double> raw) {
  ImportanceVector v;
  v.selector = std::move(selector);
  for (auto& r : raw)
    if (!(r > 0.0) || !std::isfinite(r)) r = 0.0;
  v.raw_scores = raw;
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  v.scores.assign(raw.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t j = 0; j < raw.size(); ++j) v.scores[j] = raw[j] / total;
    v.normalized = true;
  } else {
    v.all_zero = true;
    v.flags.emplace_back("all_zero");
  }
  return v;
}

inline nlohmann::json to_json(const ImportanceVector& v, const std::vector<std::string>& feature_names = {}) {
  nlohmann::json j;
  j["selector"] = v.selector;
  j["feature_names"] = feature_names;
  j["scores"] = v.scores;
  j["raw_scores"] = v.raw_scores;
  j["normalized"] = v.normalized;
  j["all_zero"] = v.all_zero;
  j["flags"] = v.flags;
  j["config"] = v.config;
  return j;
}

inline ImportanceVector importance_from_json(const nlohmann::json& j) {
  ImportanceVector v;
  v.selector = j.at("selector").get<std::string>();
  v.scores = j.at("scores").get<std::vector<double>>();
  v.raw_scores = j.at("raw_scores").get<std::vector<double>>();
  v.normalized = j.value("normalized", false);
  v.all_zero = j.value("all_zero", false);
  v.flags = j.value("flags", std::vector<std::string>{});
  v.config = j.value("config", nlohmann::json::object());
  return v;
}

}  // namespace kanfs
