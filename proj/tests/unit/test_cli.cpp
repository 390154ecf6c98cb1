#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(NLF_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t got; (got = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("nlf_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json strip_wall_time(json j) {
  j.erase("wall_time");
  return j;
}

}  // namespace

TEST(Cli, SeparateConvexityExitsZero) {
  const CliRun r = run("check sep-convex --f \"(w1-z1)^2\"");
  EXPECT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("command").get<std::string>(), "check sep-convex");
  EXPECT_EQ(j.at("exit_code").get<int>(), 0);
  for (const char* key : {"inputs", "inputs_digest", "seed", "results", "version", "wall_time"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Cli, RefutedCheckExitsTwo) {
  EXPECT_EQ(run("check sep-convex --f \"-w1^2\"").code, 2);
  EXPECT_EQ(run("check wlsc --f builtin:neg-quadratic-diff").code, 2);
  EXPECT_EQ(run("check homogeneous-bound --f \"exp(w1*z1)\" --p 1").code, 2);
}

TEST(Cli, CheckerboardCoverage) {
  const CliRun r = run("witness checkerboard --delta 0.001 --E unit-square");
  EXPECT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_GE(j.at("results").at("coverage_fraction").get<double>(), 0.2);
}

TEST(Cli, ReproNonLscExitsTwoWithUnitMargin) {
  const CliRun r = run("repro example-4-nonlsc");
  EXPECT_EQ(r.code, 2);
  const json j = json::parse(r.out);
  const json& rep = j.at("results").at("repro");
  EXPECT_EQ(rep.at("observed").get<std::string>(), "violated");
  EXPECT_NEAR(rep.at("details").at("margin").get<double>(), 1.0, 2e-2);
}

TEST(Cli, ReproHoldingExampleExitsZero) {
  EXPECT_EQ(run("repro thm-null-class").code, 0);
  const CliRun list = run("repro --list");
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("lemma-checkerboard-quarter"), std::string::npos);
}

TEST(Cli, UsageAndToolErrors) {
  EXPECT_EQ(run("").code, 64);
  EXPECT_EQ(run("frobnicate").code, 64);
  EXPECT_EQ(run("check sep-convex").code, 64);
  EXPECT_EQ(run("check no-such-kind --f w1").code, 64);
  EXPECT_EQ(run("eval --f \"w1 +\" --u x1").code, 1);
  EXPECT_EQ(run("eval --f builtin:nope --u x1").code, 1);
  EXPECT_EQ(run("repro nope").code, 1);
}

TEST(Cli, EvalValue) {
  const CliRun r = run("eval --f \"w1*z1\" --u x1 --grid 1000");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(json::parse(r.out).at("results").at("functional").at("value").get<double>(), 0.25, 1e-4);
}

TEST(Cli, DeterministicApartFromWallTime) {
  const std::string args = "check phi-convex --f builtin:example-n2-vector --grid 32 --psi-count 3 --x-count 3 "
                           "--triple-count 10 --seed 99";
  const CliRun a = run(args);
  const CliRun b = run(args);
  ASSERT_EQ(a.code, b.code);
  EXPECT_EQ(strip_wall_time(json::parse(a.out)).dump(), strip_wall_time(json::parse(b.out)).dump());
  const CliRun c = run(args + " --threads 1");
  EXPECT_EQ(strip_wall_time(json::parse(a.out)).at("results").dump(),
            strip_wall_time(json::parse(c.out)).at("results").dump());
}

TEST(Cli, ArtifactsUnderOut) {
  const fs::path d = scratch("artifacts");
  ASSERT_EQ(run("minimize --f builtin:anchored --grid 32 --out " + d.string()).code, 0);
  for (const char* f : {"report.json", "trace.csv", "trace.svg", "u_star.csv"}) EXPECT_TRUE(fs::exists(d / f)) << f;
  const json j = json::parse(slurp(d / "report.json"));
  EXPECT_LE(j.at("results").at("minimize").at("J_star").get<double>(), 1e-10);
  EXPECT_EQ(slurp(d / "trace.svg").rfind("<svg", 0), 0u);

  const fs::path p = scratch("phi");
  ASSERT_EQ(run("phi --f \"(w1-z1)^2\" --out " + p.string()).code, 0);
  EXPECT_TRUE(fs::exists(p / "phi.csv"));
  EXPECT_TRUE(fs::exists(p / "phi.svg"));

  const fs::path q = scratch("decompose");
  ASSERT_EQ(run("decompose --f builtin:weighted-quadratic --grid 16 --out " + q.string()).code, 0);
  EXPECT_TRUE(fs::exists(q / "g.csv"));
  EXPECT_TRUE(fs::exists(q / "h.csv"));
  EXPECT_EQ(run("decompose --f \"-w1^2 - z1^2\" --grid 8").code, 2);

  const fs::path h = scratch("homogeneous");
  ASSERT_EQ(run("witness homogeneous --f \"exp(w1*z1)\" --p 1 --out " + h.string()).code, 2);
  EXPECT_TRUE(fs::exists(h / "u.csv"));
  EXPECT_TRUE(fs::exists(h / "truncated_J.svg"));
  for (const fs::path& dir : {d, p, q, h}) fs::remove_all(dir);
}

TEST(Cli, ProbeAndNullClass) {
  const CliRun r = run("probe --f builtin:neg-quadratic-diff --plan oscillation --theta 0.5 --omega1 1 --omega2 -1 "
                    "--grid 128 --k-max 16");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(run("probe --f builtin:quadratic-diff --plan oscillation --theta 0.5 --omega1 1 --omega2 -1 --grid 128 "
                "--k-max 16")
                .code,
            0);
  EXPECT_EQ(run("nullclass --g \"(y1 - 0.5) * w1^2\" --h 0").code, 0);
  EXPECT_EQ(run("nullclass --g \"w1^2\" --h 0").code, 2);
}
