#include "kanfs/cli.hpp"

#include <gtest/gtest.h>

using namespace kanfs;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "kanfs");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / ("kanfs_cli_" + std::string(info->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  std::string config(const std::string& name, nlohmann::json j) const {
    if (!j.contains("output")) j["output"] = {{"dir", path("out")}};
    write_file(path(name), j.dump(2));
    return path(name);
  }

  fs::path dir;
};

nlohmann::json synthetic(const std::string& task) {
  return {{"synthetic", task}, {"n", 120}, {"d", 6}, {"n_informative", 3}, {"seed", 4}};
}

}  // namespace

TEST_F(CliTest, GenerateWritesCsvAndSidecar) {
  const auto r = cli({"generate", "--out", path("cls.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = load_csv(path("cls.csv"), {"target", TaskKind::classification, {}, {}});
  EXPECT_EQ(ds.rows(), 500);
  EXPECT_EQ(ds.cols(), 10);
  const auto side = nlohmann::json::parse(read_file(path("cls.informative.json")));
  const auto inf = side.at("informative").get<std::vector<Index>>();
  EXPECT_EQ(inf.size(), 5u);
  for (Index j : inf) {
    EXPECT_GE(j, 0);
    EXPECT_LT(j, 10);
  }
  ASSERT_EQ(cli({"generate", "--seed", "1", "--out", path("cls1.csv")}).code, 0);
  EXPECT_NE(read_file(path("cls.csv")), read_file(path("cls1.csv")));
}

TEST_F(CliTest, RankWritesOneDocumentPerSelector) {
  const auto cfg = config("rank.json", {{"dataset", synthetic("regression")}});
  const auto r = cli({"rank", cfg, "--workers", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::map<std::string, std::string> first;
  for (const auto& spec : default_selectors()) {
    const auto file = path("out/rank/" + std::string(to_string(spec.kind)) + ".json");
    ASSERT_TRUE(fs::exists(file)) << file;
    first[file] = read_file(file);
    const auto j = nlohmann::json::parse(first[file]);
    EXPECT_FALSE(j.at("cross_validated").get<bool>());
    EXPECT_EQ(j.at("scores").size(), 6u);
    EXPECT_EQ(j.at("config_hash").get<std::string>().size(), 16u);
  }
  EXPECT_EQ(first.size(), 9u);
  ASSERT_EQ(cli({"rank", cfg, "--workers", "1"}).code, 0);
  for (const auto& [file, bytes] : first) EXPECT_EQ(read_file(file), bytes) << file;
}

TEST_F(CliTest, MissingTargetIsNamedUsageError) {
  ASSERT_EQ(cli({"generate", "--task", "regression", "--n", "40", "--out", path("d.csv")}).code, 0);
  const auto cfg = config("cfg.json", {{"dataset", {{"csv", path("d.csv")}, {"target", "price"}}}});
  const auto r = cli({"rank", cfg});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("price"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConfigDiagnosticsNameLineOrField) {
  write_file(path("broken.json"), "{\n  \"dataset\": {\n    \"csv\": \"x\",\n  }\n}\n");
  auto r = cli({"benchmark", path("broken.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;

  r = cli({"benchmark", config("c1.json", {{"dataset", synthetic("regression")}, {"selectors", {"mi", "shap"}}})});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("selectors[1].kind"), std::string::npos) << r.err;

  r = cli({"benchmark", config("c2.json", {{"dataset", synthetic("regression")}, {"fold", 3}})});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("config.fold"), std::string::npos) << r.err;

  r = cli({"benchmark", config("c3.json", {{"dataset", synthetic("regression")}, {"retentions", {20, 120}}})});
  EXPECT_EQ(r.code, 1);

  EXPECT_EQ(cli({"benchmark"}).code, 1);
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"benchmark", path("absent.json")}).code, 1);
}

TEST_F(CliTest, MinimalBenchmarkWritesAllFormats) {
  const auto cfg = config("b.json", {{"dataset", synthetic("classification")},
                                     {"selectors", {"mi"}},
                                     {"predictors", {"linear"}},
                                     {"retentions", {40}},
                                     {"folds", 2},
                                     {"baseline", false}});
  const auto r = cli({"benchmark", cfg, "--workers", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = report_from_json(nlohmann::json::parse(read_file(path("out/report.json"))));
  EXPECT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.metadata.at("config_hash"), config_hash(load_run_config(cfg)));
  EXPECT_EQ(read_file(path("out/tables.csv")), emit(report, ReportFormat::csv));
  EXPECT_EQ(read_file(path("out/plotdata.csv")), emit(report, ReportFormat::plotdata));
}

TEST_F(CliTest, FlagsOverrideScalarsAndChangeHash) {
  const auto cfg = config("b.json", {{"dataset", synthetic("regression")},
                                     {"selectors", {"mi"}},
                                     {"predictors", {"linear"}},
                                     {"retentions", {40}},
                                     {"folds", 2}});
  ASSERT_EQ(cli({"benchmark", cfg, "--folds", "3", "--seed", "9", "--out-dir", path("o2")}).code, 0);
  const auto report = report_from_json(nlohmann::json::parse(read_file(path("o2/report.json"))));
  EXPECT_EQ(report.folds, 3);
  EXPECT_EQ(report.metadata.at("seed"), 9);
  EXPECT_NE(report.metadata.at("config_hash"), config_hash(load_run_config(cfg)));
  EXPECT_FALSE(fs::exists(path("out")));
}

TEST_F(CliTest, TotalFailureIsRuntimeError) {
  const auto cfg = config("b.json", {{"dataset", synthetic("regression")},
                                     {"selectors", {{{"kind", "mi"}, {"hyperparameters", {{"bins", 1}}}}}},
                                     {"predictors", {"linear"}},
                                     {"retentions", {40}},
                                     {"folds", 2},
                                     {"baseline", false}});
  const auto r = cli({"benchmark", cfg});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(fs::exists(path("out/report.json")));
}

TEST_F(CliTest, InspectModelAndImportance) {
  const auto cfg = config("r.json", {{"dataset", synthetic("regression")}, {"selectors", {"kan_l2"}}});
  ASSERT_EQ(cli({"rank", cfg, "--save-model", path("model.json")}).code, 0);
  auto r = cli({"inspect-model", path("model.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("layer 0: 6 -> 1"), std::string::npos) << r.out;
  r = cli({"inspect-model", path("out/rank/kan_l2.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("selector: kan_l2"), std::string::npos) << r.out;
  write_file(path("junk.json"), "{\"a\": 1}");
  EXPECT_EQ(cli({"inspect-model", path("junk.json")}).code, 2);
}

TEST(CliConfig, HashIgnoresWorkersAndOutput) {
  const nlohmann::json base = {{"dataset", synthetic("regression")}};
  auto a = base, b = base, c = base;
  b["workers"] = 7;
  b["output"] = {{"dir", "elsewhere"}};
  c["seed"] = 1;
  EXPECT_EQ(config_hash(run_config_from_json(a)), config_hash(run_config_from_json(b)));
  EXPECT_NE(config_hash(run_config_from_json(a)), config_hash(run_config_from_json(c)));
}

TEST(CliConfig, WorkerResolution) {
  EXPECT_EQ(resolve_workers(3), 3);
  EXPECT_THROW(resolve_workers(0), Error);
  ::setenv("KANFS_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(std::nullopt), 5);
  ::setenv("KANFS_WORKERS", "two", 1);
  EXPECT_THROW(resolve_workers(std::nullopt), Error);
  ::unsetenv("KANFS_WORKERS");
  EXPECT_GE(resolve_workers(std::nullopt), 1);
}
