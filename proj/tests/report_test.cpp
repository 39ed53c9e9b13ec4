#include "kanfs/report.hpp"

#include <gtest/gtest.h>

using namespace kanfs;

namespace {

BenchmarkReport hand_report() {
  BenchmarkReport r;
  r.metadata = {{"dataset", "toy"}};
  r.selectors = {kAllFeaturesLabel, "KAN-L2", "Mutual Info", "KAN-KO"};
  r.predictors = {"RF", "LogReg"};
  r.retentions = {20, 60};
  r.folds = 2;
  r.feature_names = {"a", "b", "c"};
  double v = 0.5;
  for (const auto& s : r.selectors)
    for (double k : s == kAllFeaturesLabel ? std::vector<double>{100} : r.retentions)
      for (const auto& p : r.predictors)
        for (int f = 0; f < 2; ++f) {
          r.cells.push_back({s, k, p, f, v, ""});
          v += 0.01;
        }
  SelectionRecord rec;
  rec.selector = "KAN-L2";
  rec.importance = make_importance("kan_l2", {1.0, 2.0, 1.0});
  rec.ranking = rec.importance.scores;
  rec.selected = {{20.0, {1}}, {60.0, {0, 1}}};
  r.selections.push_back(rec);
  r.finalize();
  return r;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Report, TableLayout) {
  const auto r = hand_report();
  const auto t = to_table(r, 60);
  EXPECT_EQ(t.header, (std::vector<std::string>{"Models", "All Features", "KAN-KO", "KAN-L2", "Mutual Info"}));
  EXPECT_EQ(t.row_labels, (std::vector<std::string>{"LogReg", "RF"}));
  // KAN-L2 / 60 / LogReg cells were 0.5 + 0.01 * (4 + 4 + 2) + {0, 0.01}.
  EXPECT_NEAR(*t.values[0][2], 0.605, 1e-12);
  EXPECT_NEAR(*t.values[0][0], (0.52 + 0.53) / 2, 1e-12);
  try {
    to_table(r, 40);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_retention);
  }
}

TEST(Report, SingleFoldTableEqualsRawCells) {
  BenchmarkReport r;
  r.selectors = {"LASSO/L1"};
  r.predictors = {"GB"};
  r.retentions = {40};
  r.folds = 1;
  r.cells = {{"LASSO/L1", 40, "GB", 0, 0.8125, ""}};
  r.finalize();
  EXPECT_EQ(*to_table(r, 40).values[0][0], 0.8125);
}

TEST(Report, JsonRoundTrip) {
  auto r = hand_report();
  r.cells.push_back({"KAN-KO", 20, "RF", 2, std::nullopt, "boom"});
  r.finalize();
  const auto text = emit(r, ReportFormat::json);
  const auto back = report_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back, r);
  EXPECT_EQ(emit(back, ReportFormat::json), text);
}

TEST(Report, CsvShape) {
  const auto r = hand_report();
  const auto lines = split_lines(table_csv(to_table(r, 20)));
  ASSERT_EQ(lines.size(), 1u + r.predictors.size());
  EXPECT_EQ(lines[0], "Models,All Features,KAN-KO,KAN-L2,Mutual Info");
  for (const auto& l : lines) EXPECT_EQ(std::count(l.begin(), l.end(), ','), 4);
  const auto all = split_lines(emit(r, ReportFormat::csv));
  EXPECT_EQ(all.front(), "# retention 20%");
  EXPECT_EQ(all.size(), 2 * (2u + r.predictors.size()) + 1);
}

TEST(Report, PlotDataStandardError) {
  const auto r = hand_report();
  const auto lines = split_lines(plot_data(r));
  EXPECT_EQ(lines[0], "selector,predictor,retention,mean,stderr,folds");
  // Two fold scores x, x + 0.01: sample sd = 0.01 / sqrt(2), stderr = 0.005.
  bool found = false;
  for (const auto& l : lines)
    if (l.rfind("KAN-L2,RF,60,", 0) == 0) {
      found = true;
      std::vector<std::string> f;
      std::stringstream ss(l);
      for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
      EXPECT_NEAR(std::stod(f[4]), 0.005, 1e-12);
      EXPECT_EQ(f[5], "2");
    }
  EXPECT_TRUE(found);
  EXPECT_NEAR(standard_error({1.0, 2.0, 3.0}), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_EQ(standard_error({4.0}), 0.0);
}

TEST(Report, AggregatesRecomputable) {
  auto r = hand_report();
  const auto before = r.aggregates;
  r.aggregates.clear();
  r.finalize();
  EXPECT_EQ(r.aggregates, before);
  EXPECT_EQ(r.retention_averages.at({"KAN-L2", "RF"}),
            (*r.aggregate("KAN-L2", 20, "RF") + *r.aggregate("KAN-L2", 60, "RF")) / 2);
}

TEST(Report, FormatNames) {
  EXPECT_EQ(report_format_from_string("plotdata"), ReportFormat::plotdata);
  EXPECT_THROW(report_format_from_string("xlsx"), Error);
}
