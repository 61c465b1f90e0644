#include "finsler_liouville/experiments.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace fl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fl_experiments_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small(const std::string& id, const fs::path& out, nlohmann::json extra = nlohmann::json::object()) {
  extra["out"] = out.string();
  return ExperimentConfig::from_json(id, extra);
}

}  // namespace

TEST(Experiments, CatalogIsFixed) {
  const std::vector<std::string> ids{"props2_1", "coarea", "isoperimetric", "polya_szego", "talenti",
                                     "maxprinciple", "comparison", "mvp", "green", "thm11",
                                     "thm12", "thm13", "thm14", "d0"};
  const auto& cat = list_experiments();
  ASSERT_EQ(cat.size(), 14u);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(cat[i].id, ids[i]);
    EXPECT_FALSE(cat[i].description.empty());
    EXPECT_TRUE(is_experiment(ids[i]));
  }
  EXPECT_FALSE(is_experiment("thm15"));
}

TEST(Experiments, UnknownIdAndKeysAreRejected) {
  ExperimentConfig c;
  c.id = "nope";
  try {
    run_experiment(c);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown experiment"), std::string::npos);
  }
  EXPECT_THROW(ExperimentConfig::from_json("nope", nlohmann::json::object()), InputError);
  EXPECT_THROW(ExperimentConfig::from_json("thm11", {{"cels", 3}}), InputError);
  EXPECT_THROW(ExperimentConfig::from_json("thm11", {{"thm11", {{"typo", 1}}}}), InputError);
}

TEST(Experiments, SectionOverridesApplyToOneExperiment) {
  const nlohmann::json j{{"cells", 40}, {"seed", 9}, {"thm11", {{"cells", 80}}}};
  EXPECT_EQ(ExperimentConfig::from_json("thm11", j).cells, 80);
  EXPECT_EQ(ExperimentConfig::from_json("thm12", j).cells, 40);
  EXPECT_EQ(ExperimentConfig::from_json("thm11", j).seed, 9u);
}

TEST(Experiments, Thm11WritesReportAndTable) {
  const auto out = scratch("thm11");
  const auto r = run_experiment(small("thm11", out, {{"cells", 48}}));
  EXPECT_EQ(r.status, 0) << r.report.dump(2);
  EXPECT_TRUE(fs::exists(out / "thm11_report.json"));
  EXPECT_TRUE(fs::exists(out / "lhs_vs_delta.csv"));
  const auto report = nlohmann::json::parse(slurp(out / "thm11_report.json"));
  EXPECT_TRUE(report.at("passed").get<bool>());
  EXPECT_TRUE(report.at("achieved").contains("worst_lhs_over_rhs"));
  EXPECT_EQ(slurp(out / "lhs_vs_delta.csv").substr(0, 25), "field,delta,lhs,rhs,ratio");
}

TEST(Experiments, Thm14ReportsTheFormulaValue) {
  const auto out = scratch("thm14");
  const auto r = run_experiment(small("thm14", out, {{"cells", 128}}));
  ASSERT_NE(r.status, 1) << r.report.dump(2);
  EXPECT_NEAR(r.report["result"]["alpha_formula"].get<double>(), 8 * std::numbers::pi, 1e-12);
  EXPECT_TRUE(r.report["result"].contains("alpha_local_mass"));
  EXPECT_TRUE(r.report["result"].contains("alpha_pohozaev"));
}

TEST(Experiments, SameSeedGivesIdenticalBytes) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const nlohmann::json cfg{{"cells", 32}, {"samples", 3}, {"seed", 5}};
  for (const auto* id : {"coarea", "isoperimetric"}) {
    run_experiment(small(id, a, cfg));
    run_experiment(small(id, b, cfg));
  }
  for (const auto* f : {"coarea.csv", "isoperimetric.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  auto other = cfg;
  other["seed"] = 6;
  const auto c = scratch("det_c");
  run_experiment(small("coarea", c, other));
  EXPECT_NE(slurp(a / "coarea.csv"), slurp(c / "coarea.csv"));
}

TEST(Experiments, ModuleErrorsAreSerialized) {
  const auto out = scratch("error");
  const auto r = run_experiment(small("props2_1", out, {{"gauge", "family=diagonal; dimension=2; weights=1,-4"}}));
  EXPECT_EQ(r.status, 1);
  const auto report = nlohmann::json::parse(slurp(out / "props2_1_report.json"));
  EXPECT_FALSE(report["passed"].get<bool>());
  EXPECT_FALSE(report["error"]["message"].get<std::string>().empty());
}

TEST(Experiments, ManifestListsInputsTolerancesAndFiles) {
  const auto out = scratch("manifest");
  const auto cfg = small("props2_1", out, {{"samples", 200}});
  const auto r = run_experiment(cfg);
  write_manifest(out.string(), {cfg}, {r});
  const auto m = slurp(out / "MANIFEST");
  EXPECT_NE(m.find("finsler-liouville "), std::string::npos);
  EXPECT_NE(m.find("[props2_1]"), std::string::npos);
  EXPECT_NE(m.find("inputs "), std::string::npos);
  EXPECT_NE(m.find("achieved worst_violation"), std::string::npos);
  EXPECT_NE(m.find("file properties.csv"), std::string::npos);
}
