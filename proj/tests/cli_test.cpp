#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("acimlab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(ACIMLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SingleCellUlamMatrix) {
  const auto out = scratch("ulam1");
  ASSERT_EQ(run("ulam --set n=1 --out " + out.string()), 0);
  EXPECT_EQ(slurp(out / "ulam_matrix.csv"), "row,col,value\n0,0,1\n");
  EXPECT_TRUE(fs::exists(out / "metadata.json"));
  EXPECT_NE(slurp(out / "metadata.json").find("splitmix64-counter"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  const auto out = scratch("bad");
  EXPECT_EQ(run("simulate --set x0=1.5 --out " + out.string()), 2);
  EXPECT_EQ(run("ulam --set preset=unknown --out " + out.string()), 2);
  EXPECT_EQ(run("simulate --config /nonexistent/file.cfg --out " + out.string()), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_FALSE(fs::exists(out / "metadata.json"));
}

TEST(Cli, ConditionFailureExitsWithThree) {
  const auto out = scratch("cond");
  EXPECT_EQ(run("conditions-check --out " + out.string()), 0);
  EXPECT_NE(slurp(out / "report.txt").find("delta=0.33333333333333331"), std::string::npos);
  EXPECT_EQ(run("conditions-check --set preset=pure_t1 --out " + out.string()), 3);
}

TEST(Cli, NonConvergenceExitsWithFour) {
  const auto out = scratch("nc");
  EXPECT_EQ(run("invariant-density --set n=256 --set max_iter=2 --out " + out.string()), 4);
  EXPECT_TRUE(fs::exists(out / "invariant_density.csv"));
}

TEST(Cli, StabilitySweepControlIsNearZero) {
  const auto out = scratch("sweep");
  ASSERT_EQ(run("stability-sweep --set n=256 --set epsilons=0.1,0 --set tol=1e-12 --out " + out.string()), 0);
  std::ifstream is(out / "sweep.csv");
  std::string header, first, last;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, last);
  EXPECT_EQ(header, "epsilon,l1_distance,converged");
  EXPECT_EQ(first.substr(0, first.find(',')), "0.10000000000000001");
  ASSERT_EQ(last.substr(0, 2), "0,");
  const double d = std::stod(last.substr(2, last.find(',', 2) - 2));
  EXPECT_LE(d, 1e-9);
  EXPECT_TRUE(fs::exists(out / "f_star.csv"));
  EXPECT_TRUE(fs::exists(out / "f_eps_0.10000000000000001.csv"));
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "simulate --seed 9 --set steps=20000 --set cells=64 --set dump_orbit=true --out ";
  ASSERT_EQ(run(args + a.string()), 0);
  ASSERT_EQ(run(args + b.string() + " --threads 3"), 0);
  for (const char* f : {"empirical_density.csv", "orbit.csv", "report.txt"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto c = scratch("det_c");
  ASSERT_EQ(run("simulate --seed 10 --set steps=20000 --set cells=64 --out " + c.string()), 0);
  EXPECT_NE(slurp(a / "empirical_density.csv"), slurp(c / "empirical_density.csv"));
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto out = scratch("cfg");
  fs::create_directories(out);
  {
    std::ofstream os(out / "run.cfg");
    os << "preset = example4\nn = 64   # cells\n";
  }
  ASSERT_EQ(run("ulam --config " + (out / "run.cfg").string() + " --set n=2 --out " + out.string()), 0);
  const std::string m = slurp(out / "ulam_matrix.csv");
  EXPECT_EQ(std::count(m.begin(), m.end(), '\n'), 5);
}
