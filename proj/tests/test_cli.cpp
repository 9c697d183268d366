#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sann/version.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sann_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(SANN_CLI_PATH) + " --out-dir " + out.string() + " " + args +
                          " > " + (out.string() + ".log") + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, HeavisideDemoWritesArtifacts) {
  const auto out = scratch("heaviside");
  ASSERT_EQ(run("heaviside-demo", out), 0) << slurp(out.string() + ".log");
  const std::string csv = slurp(out / "heaviside-demo.csv");
  EXPECT_NE(csv.find("# sann_cli " + std::string(sann::kVersion)), std::string::npos);
  EXPECT_NE(csv.find("# config: "), std::string::npos);
  EXPECT_NE(csv.find("\n0,0\n"), std::string::npos) << "F(0) = 0 row";
  const std::string json = slurp(out / "heaviside-demo.json");
  EXPECT_NE(json.find("\"version\""), std::string::npos);
  EXPECT_NE(json.find("\"config\""), std::string::npos);
  EXPECT_NE(slurp(out / "heaviside-demo.svg").find("<svg"), std::string::npos);
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("jacobi-demo --n 10 --systems 3 --steps 40", a), 0);
  ASSERT_EQ(run("jacobi-demo --n 10 --systems 3 --steps 40", b), 0);
  for (const char* ext : {".csv", ".json", ".svg"}) {
    const std::string name = std::string("jacobi-demo") + ext;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
}

TEST(Cli, GradcheckReportsPass) {
  const auto out = scratch("gradcheck");
  ASSERT_EQ(run("gradcheck --trials 3", out), 0);
  EXPECT_NE(slurp(out / "gradcheck.json").find("\"pass\": true"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto out = scratch("usage");
  EXPECT_EQ(run("no-such-command", out), 2);
  EXPECT_EQ(run("heaviside-demo --bogus 1", out), 2);
  EXPECT_EQ(run("train-linear --lr -1", out), 2);
  EXPECT_EQ(run("train-linear --scheme midpoint", out), 2);
  const fs::path cfg = fs::temp_directory_path() / "sann_cli_test_bad.ini";
  std::ofstream(cfg) << "[heaviside-demo]\nbogus_key = 3\n";
  EXPECT_EQ(run("--config " + cfg.string() + " heaviside-demo", out), 2);
  EXPECT_NE(slurp(out.string() + ".log").find("bogus_key"), std::string::npos);
}

TEST(Cli, ConfigFileSetsKeys) {
  const auto out = scratch("config");
  const fs::path cfg = fs::temp_directory_path() / "sann_cli_test_good.ini";
  std::ofstream(cfg) << "[heaviside-demo]\npoints = 5\n";
  ASSERT_EQ(run("--config " + cfg.string() + " heaviside-demo", out), 0);
  EXPECT_NE(slurp(out / "heaviside-demo.json").find("\"points\": 5"), std::string::npos);
}

TEST(Cli, ThresholdFailureExitsOne) {
  const auto out = scratch("threshold");
  EXPECT_EQ(run("train-linear --n 2 --train-size 16 --val-size 4 --epochs 1 --widths 5 "
                "--ff-widths 4",
                out),
            1);
}

TEST(Cli, EnvironmentOverridesOutputDirectory) {
  const auto out = scratch("env");
  const std::string cmd = "SANN_OUT_DIR=" + out.string() + " " + SANN_CLI_PATH +
                          " charfn-demo > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(out / "charfn-demo.csv"));
}

}  // namespace
