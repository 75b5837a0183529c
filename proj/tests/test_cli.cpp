#include "riskbai/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace riskbai;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "riskbai-cli-test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, HelpListsSubcommandsAndFlags) {
  const auto top = cli({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* s : {"run-experiment", "validate-concentration", "compute-bounds",
                        "demo-lower-bound", "list-instances"})
    EXPECT_NE(top.out.find(s), std::string::npos) << s;
  const auto run = cli({"run-experiment", "--help"});
  EXPECT_EQ(run.code, 0);
  for (const char* s : {"--config", "--instance", "--trials", "--budgets", "--seed", "--workers",
                        "--out", "--paper-scale", "--schedule"})
    EXPECT_NE(run.out.find(s), std::string::npos) << s;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  const auto unknown = cli({"run-experiment", "--instance", "lomax-cvar", "--out", "x.csv", "--bogus"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("--bogus"), std::string::npos);
  EXPECT_EQ(cli({"run-experiment", "--instance", "lomax-cvar"}).code, 2);  // --out is required
  EXPECT_EQ(cli({"run-experiment", "--out", scratch("none.csv").string()}).code, 2);
  EXPECT_EQ(cli({"run-experiment", "--instance", "nope", "--out", scratch("nope.csv").string()}).code, 2);
  EXPECT_EQ(cli({"run-experiment", "--instance", "lomax-cvar", "--paper-scale", "--trials", "5",
                 "--out", scratch("x.csv").string()})
                .code,
            2);
  EXPECT_EQ(cli({"compute-bounds", "--p", "3"}).code, 2);
}

TEST(Cli, BadDistributionNamesField) {
  const auto r = cli({"validate-concentration", "--dist", "{kind: lomax, mean: 1, shape: 1}",
                      "--bound", "empirical-cvar", "--n", "100", "--delta", "1"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("shape"), std::string::npos);
  EXPECT_NE(r.err.find("line 1, column 31"), std::string::npos);
}

TEST(Cli, BadConfigFileReportsPosition) {
  const auto path = scratch("bad.yaml");
  std::ofstream(path) << "builtin: lomax-cvar\ntrials: many\n";
  const auto r = cli({"run-experiment", "--config", path.string(), "--out", scratch("bad.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2, column 9"), std::string::npos) << r.err;
}

TEST(Cli, RunExperimentIsReproducible) {
  const auto cfg = scratch("small.yaml");
  std::ofstream(cfg) << "builtin: lomax-cvar\nbudgets: [1000, 4000]\ntrials: 200\nseed: 5\n";
  const auto a = scratch("a.csv"), b = scratch("b.csv");
  const auto ra = cli({"run-experiment", "--config", cfg.string(), "--out", a.string(), "--workers", "1"});
  ASSERT_EQ(ra.code, 0) << ra.err;
  const auto rb = cli({"run-experiment", "--config", cfg.string(), "--out", b.string(), "--workers", "4",
                       "--quiet"});
  ASSERT_EQ(rb.code, 0) << rb.err;
  const std::string csv = slurp(a);
  EXPECT_EQ(csv, slurp(b));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSweepCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_NE(ra.err.find("T=4000"), std::string::npos) << ra.err;
  EXPECT_TRUE(rb.err.empty()) << rb.err;
  EXPECT_NE(ra.out.find("median-of-bins"), std::string::npos);
}

TEST(Cli, RunExperimentOverrides) {
  const auto out = scratch("ov.csv");
  const auto r = cli({"run-experiment", "--instance", "exponential-mean", "--budgets", "12,500",
                      "--trials", "20", "--schedule", "halving", "--out", out.string(), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.find(",12,"), std::string::npos);
  EXPECT_NE(csv.find("exponential-mean,halving,empirical,,,500,20,"), std::string::npos) << csv;
  EXPECT_NE(r.err.find("12"), std::string::npos);  // infeasible budget warning
}

TEST(Cli, ComputeBounds) {
  const auto r = cli({"compute-bounds", "--p", "2", "--B", "1", "--V", "1", "--delta", "1", "--alpha",
                      "0.95", "--n", "1000"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "name,value,threshold");
  EXPECT_NE(r.out.find("\nv_emp,120,"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\nC_p,36,"), std::string::npos);
  EXPECT_NE(r.out.find("\nmedian_of_cvars_threshold,10437120"), std::string::npos);
  const auto sr = cli({"compute-bounds", "--p", "2", "--B", "1", "--V", "1", "--delta", "0.5",
                       "--T", "100000", "--K", "10"});
  ASSERT_EQ(sr.code, 0) << sr.err;
  EXPECT_NE(sr.out.find("sr_truncation_error"), std::string::npos);
  EXPECT_NE(sr.out.find("sr_mob_error"), std::string::npos);
}

TEST(Cli, DemoAndValidate) {
  const auto d = cli({"demo-lower-bound"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(std::count(d.out.begin(), d.out.end(), '\n'), 4);
  EXPECT_NE(d.out.find("\n10,1,"), std::string::npos) << d.out;

  const auto v = cli({"validate-concentration", "--dist", "{kind: exponential, mean: 1}", "--bound",
                      "empirical-cvar", "--n", "1000,4000", "--delta", "1", "--batches", "200"});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_EQ(std::count(v.out.begin(), v.out.end(), '\n'), 3);
  EXPECT_NE(v.out.find("0,empirical-cvar,1000,1,"), std::string::npos) << v.out;

  const auto l = cli({"list-instances"});
  EXPECT_EQ(l.code, 0);
  for (const auto& e : builtin_experiments()) EXPECT_NE(l.out.find(e.name), std::string::npos);
}

#ifdef RISKBAI_CLI_PATH
TEST(Cli, BinaryExitCodes) {
  auto status = [](const std::string& args) {
    const std::string cmd = std::string(RISKBAI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("list-instances"), 0);
  EXPECT_EQ(status("run-experiment --bogus"), 2);
}
#endif
