#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string("\"") + NCRAT_CLI_PATH + "\" " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(NCRAT_TEST_DATA) + "/" + name; }

nlohmann::json parsed(const CliRun& r) { return nlohmann::json::parse(r.out); }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("nope").code, 2);
  EXPECT_EQ(run("eval \"x1 +\" --scalars 1").code, 2);
  EXPECT_EQ(run("eval x1").code, 2);
  EXPECT_EQ(run("certify \"i*x1\"").code, 2);
  EXPECT_EQ(run("full /nonexistent.json").code, 2);
}

TEST(Cli, EvalAndDomainError) {
  const CliRun ok = run("eval \"x1*x2 - x2*x1\" --at " + data("tuple.json"));
  ASSERT_EQ(ok.code, 0);
  EXPECT_TRUE(parsed(ok)["defined"].get<bool>());
  const CliRun bad = run("eval \"inv(x4 - x3*inv(x1)*x2)\" --scalars 0,1,1,1");
  ASSERT_EQ(bad.code, 3);
  EXPECT_EQ(parsed(bad)["subexpression"], "inv(x1)");
}

TEST(Cli, WidenThenEvaluate) {
  const CliRun w = run("widen \"inv(x4 - x3*inv(x1)*x2)\" --pencil " + data("block2x2.json"));
  ASSERT_EQ(w.code, 0);
  const std::string expr = parsed(w)["expr"];
  EXPECT_FALSE(parsed(w)["gain_witnesses"].empty());
  const CliRun v = run("eval \"" + expr + "\" --scalars 0,1,1,1");
  ASSERT_EQ(v.code, 0);
  const auto val = parsed(v)["value"][0][0];
  EXPECT_LE(std::abs(val[0].get<double>()) + std::abs(val[1].get<double>()), 1e-10);
}

TEST(Cli, Fullness) {
  EXPECT_EQ(parsed(run("full " + data("full_generic.json")))["verdict"], "full");
  EXPECT_EQ(parsed(run("full " + data("full_repeated.json")))["verdict"], "not-full-probabilistic");
}

TEST(Cli, Extensions) {
  for (const char* kind : {"side", "square", "hermitian", "nonhermitian"}) {
    const CliRun r = run(std::string("extend ") + kind + " " + data(std::string(kind) + ".json"));
    EXPECT_EQ(r.code, 0) << kind;
    EXPECT_EQ(parsed(r)["kind"], kind);
  }
  EXPECT_EQ(run("extend square " + data("square.json") + " --mode blocks").code, 0);
  EXPECT_EQ(run("extend square " + data("square.json") + " --mode other").code, 2);
}

TEST(Cli, CertifyExitCodes) {
  const CliRun yes = run("certify \"x1*x1\" --level 1");
  ASSERT_EQ(yes.code, 0);
  EXPECT_TRUE(parsed(yes)["certified"].get<bool>());
  const CliRun no = run("certify x1 --level 1");
  ASSERT_EQ(no.code, 1);
  EXPECT_FALSE(parsed(no)["certified"].get<bool>());
  EXPECT_FALSE(parsed(no)["violation"].is_null());
}

TEST(Cli, OptimizeReport) {
  const std::string report = (std::filesystem::temp_directory_path() / "ncrat_cli_report.txt").string();
  const CliRun r = run("optimize x1 --lmi " + data("interval.json") + " --sup --level 1 --report " + report);
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(parsed(r)["mu"].get<double>(), 1.0, 1e-6);
  std::ifstream is(report);
  std::string first;
  std::getline(is, first);
  EXPECT_EQ(first, "μ=1.000000");
  std::filesystem::remove(report);
  EXPECT_EQ(run("optimize x1 --sup --level 1").code, 1);  // unbounded without an LMI
}

TEST(Cli, SeedFromEnvironment) {
  const CliRun a = run("full " + data("full_generic.json") + " --seed 9");
  const std::string cmd = "NCRAT_SEED=9 \"" + std::string(NCRAT_CLI_PATH) + "\" full " + data("full_generic.json");
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  pclose(pipe);
  EXPECT_EQ(a.out, out);
}

TEST(Cli, ExportSdpa) {
  const std::string path = (std::filesystem::temp_directory_path() / "ncrat_cli_export.dat-s").string();
  const CliRun r = run("export-sdpa \"x1*x1\" --level 1 -o " + path);
  ASSERT_EQ(r.code, 0);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header.rfind("* ncrat: complex-blocks", 0), 0u);
  std::filesystem::remove(path);
}
