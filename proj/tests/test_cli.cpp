#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "dccm/cli.hpp"
#include "dccm/novel_metrics.hpp"
#include "dccm/report.hpp"
#include "dccm/simulator.hpp"

namespace dccm::cli {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string drop_generated_at(const std::string& report) {
  auto j = report::Json::parse(report);
  j["meta"].erase("generated_at");
  return j.dump();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("dccm_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    spit(dir_ / "sim.json", R"({"seed": 11, "duration_s": 60, "tiers": {"cloud": 1, "edge": 1, "iot": 2},
      "adaptation_plan": [{"event_id": "e1", "p_base": 2, "p_post": 1, "t_adapt_s": 2}]})");
    ASSERT_EQ(run_cli({"simulate", "--config", path("sim.json"), "--out", path("trace.jsonl")}).code, kOk);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static Trace trace() { return load_trace_file(path("trace.jsonl")).trace; }

  static fs::path dir_;
};

fs::path CliTest::dir_;

TEST_F(CliTest, ValidateSimulatedTrace) {
  const auto r = run_cli({"validate", "--in", path("trace.jsonl")});
  EXPECT_EQ(r.code, kOk);
  EXPECT_EQ(r.out, "0 violations\n");
}

TEST_F(CliTest, ValidateReportsViolations) {
  spit(dir_ / "bad.jsonl",
       R"({"type":"node","node_id":"a","timestamp":0,"tier":"edge","cpu_util":1.5,"mem_util":0.1,"energy_j":0,"busy_s":0})"
       "\n");
  const auto r = run_cli({"validate", "--in", path("bad.jsonl")});
  EXPECT_EQ(r.code, kDataError);
  EXPECT_EQ(r.out, "1 violations\n");
  EXPECT_NE(r.err.find("violation:"), std::string::npos);
  const auto j = run_cli({"validate", "--in", path("bad.jsonl"), "--json"});
  EXPECT_EQ(j.code, kDataError);
  EXPECT_NO_THROW(report::Json::parse(j.out));
}

TEST_F(CliTest, FairnessMatchesLibrary) {
  const Trace t = trace();
  for (const auto& [name, res] : {std::pair{"cpu", novel::FairnessResource::cpu},
                                  std::pair{"energy", novel::FairnessResource::energy},
                                  std::pair{"bandwidth", novel::FairnessResource::bandwidth}}) {
    const auto r = run_cli({"fairness", "--in", path("trace.jsonl"), "--resource", name});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(report::Json::parse(r.out), report::measure(novel::fairness_by_resource(t, res).index)) << name;
  }
  const auto v = run_cli({"fairness", "--values", "1,2,3"});
  EXPECT_EQ(report::Json::parse(v.out), report::measure(novel::jain_fairness(std::vector<double>{1, 2, 3})));
  EXPECT_EQ(run_cli({"fairness", "--values", "0,0"}).code, kArgumentError);
}

TEST_F(CliTest, AdaptivityMatchesLibrary) {
  const auto r = run_cli({"adaptivity", "--in", path("trace.jsonl")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(report::Json::parse(r.out), report::measure(novel::adaptivity_quotient(trace().adaptations)));
}

TEST_F(CliTest, ThermalFitPerNode) {
  const auto r = run_cli({"thermal-fit", "--in", path("trace.jsonl"), "--te", "25", "--node", trace().node_ids[1]});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto j = report::Json::parse(r.out);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0]["k"].get<double>(), 0.02, 1e-6);
  EXPECT_EQ(run_cli({"thermal-fit", "--in", path("trace.jsonl"), "--node", "ghost"}).code, kArgumentError);
}

TEST_F(CliTest, ObservabilityPrintsMatrix) {
  const auto r = run_cli({"observability", "--in", path("trace.jsonl"), "--lag", "2"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NO_THROW(report::Json::parse(r.out));
}

TEST_F(CliTest, EquilibriumSolvesProblem) {
  spit(dir_ / "problem.json", R"({"r_axis":[1,2,3],"c_axis":[1,2],"c_max":2,"r_min":2,"surface":[[1,0],[5,2],[3,9]]})");
  const auto r = run_cli({"equilibrium", "--problem", path("problem.json")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("9"), std::string::npos);
  spit(dir_ / "infeasible.json", R"({"r_axis":[1],"c_axis":[5],"c_max":2,"r_min":1,"surface":[[1]]})");
  EXPECT_EQ(run_cli({"equilibrium", "--problem", path("infeasible.json")}).code, kDataError);
}

TEST_F(CliTest, QualityListAndMetric) {
  const auto list = run_cli({"quality", "--list"});
  EXPECT_EQ(list.code, kOk);
  EXPECT_NE(list.out.find("fleet_mean_cpu_util\tfraction\t"), std::string::npos);
  const auto one = run_cli({"quality", "--metric", "fleet_mean_cpu_util", "--in", path("trace.jsonl")});
  ASSERT_EQ(one.code, kOk) << one.err;
  EXPECT_NO_THROW(report::Json::parse(one.out));
  EXPECT_EQ(run_cli({"quality", "--metric", "nope", "--in", path("trace.jsonl")}).code, kArgumentError);
}

TEST_F(CliTest, ReportIsDeterministic) {
  const std::vector<std::string> args{"report", "--in", path("trace.jsonl"), "--seed-config", path("sim.json")};
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  ASSERT_EQ(a.code, kOk) << a.err;
  EXPECT_EQ(drop_generated_at(a.out), drop_generated_at(b.out));
  const auto j = report::Json::parse(a.out);
  for (const char* key : {"meta", "classic", "novel", "observability", "metric_quality", "ground_truth", "warnings"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST_F(CliTest, ReportWritesCsv) {
  const auto r = run_cli({"report", "--in", path("trace.jsonl"), "--format", "csv", "--no-quality", "--out",
                          path("report.csv")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  const std::string csv = slurp(dir_ / "report.csv");
  EXPECT_EQ(csv.rfind("metric,value\n", 0), 0u);
  EXPECT_NE(csv.find("novel.fairness.cpu.index,"), std::string::npos);
}

TEST_F(CliTest, CarbonIntensityPrecedence) {
  auto carbon = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"report", "--in", path("trace.jsonl"), "--no-quality"};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, kOk) << r.err;
    return report::Json::parse(r.out)["novel"]["carbon"];
  };
  spit(dir_ / "report_cfg.json", R"({"carbon": {"intensity_g_per_kwh": 300}})");
  ::setenv("CM_CARBON_INTENSITY", "200", 1);
  EXPECT_EQ(carbon({})["intensity_source"], "env");
  EXPECT_EQ(carbon({})["intensity_g_per_kwh"], 200.0);
  EXPECT_EQ(carbon({"--config", path("report_cfg.json")})["intensity_g_per_kwh"], 300.0);
  EXPECT_EQ(carbon({"--config", path("report_cfg.json"), "--carbon-intensity", "50"})["intensity_g_per_kwh"], 50.0);
  ::unsetenv("CM_CARBON_INTENSITY");
  EXPECT_EQ(carbon({})["intensity_source"], "default");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli({}).code, kArgumentError);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kArgumentError);
  const auto bad_flag = run_cli({"validate", "--in", path("trace.jsonl"), "--bogus"});
  EXPECT_EQ(bad_flag.code, kArgumentError);
  EXPECT_NE(bad_flag.err.find("error:"), std::string::npos);
  EXPECT_NE(bad_flag.err.find("Usage"), std::string::npos);
  EXPECT_TRUE(bad_flag.out.empty());
  EXPECT_EQ(run_cli({"report", "--in", path("trace.jsonl"), "--format", "xml"}).code, kArgumentError);
  EXPECT_EQ(run_cli({"report", "--in", path("trace.jsonl"), "--window", "oops"}).code, kArgumentError);
  EXPECT_EQ(run_cli({"fairness", "--in", path("missing.jsonl"), "--resource", "cpu"}).code, kDataError);
  spit(dir_ / "cfg_unknown.json", R"({"colour": "blue"})");
  EXPECT_EQ(run_cli({"report", "--in", path("trace.jsonl"), "--config", path("cfg_unknown.json")}).code,
            kArgumentError);
  spit(dir_ / "calm.json", R"({"duration_s": 10})");
  ASSERT_EQ(run_cli({"simulate", "--config", path("calm.json"), "--out", path("calm.jsonl")}).code, kOk);
  EXPECT_EQ(run_cli({"adaptivity", "--in", path("calm.jsonl")}).code, kDataError);
  EXPECT_EQ(run_cli({"--version"}).code, kOk);
  EXPECT_EQ(run_cli({"--help"}).code, kOk);
}

// Golden files pin the exact bytes of the simulator and the main subcommands.
// Regenerate with DCCM_UPDATE_GOLDEN=1 after an intended output change.
class GoldenTest : public ::testing::Test {
 protected:
  static fs::path golden(const std::string& name) { return fs::path(DCCM_GOLDEN_DIR) / name; }

  static void check(const std::string& name, const std::string& actual) {
    if (std::getenv("DCCM_UPDATE_GOLDEN")) {
      spit(golden(name), actual);
      return;
    }
    ASSERT_TRUE(fs::exists(golden(name))) << name;
    EXPECT_EQ(slurp(golden(name)), actual) << name;
  }
};

TEST_F(GoldenTest, SubcommandOutputs) {
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  const std::string cfg = golden("sim_config.json").string();
  const auto trace_path = (fs::temp_directory_path() / ("dccm_golden_" + std::to_string(::getpid()) + ".jsonl")).string();
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--out", trace_path}).code, kOk);
  check("trace.jsonl", slurp(trace_path));
  check("report.json", run_cli({"report", "--in", trace_path, "--seed-config", cfg}).out);
  check("report.csv", run_cli({"report", "--in", trace_path, "--format", "csv"}).out);
  check("fairness_cpu.txt", run_cli({"fairness", "--in", trace_path, "--resource", "cpu"}).out);
  check("observability.json", run_cli({"observability", "--in", trace_path}).out);
  check("thermal_fit.json", run_cli({"thermal-fit", "--in", trace_path}).out);
  check("adaptivity.txt", run_cli({"adaptivity", "--in", trace_path}).out);
  fs::remove(trace_path);
  ::unsetenv("SOURCE_DATE_EPOCH");
}

}  // namespace
}  // namespace dccm::cli
