#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("agc_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(AGC_CLI_PATH) + " " + args + " > " + (dir_ / "stdout").string() + " 2> " +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string read(const std::string& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  static std::string scenario(const std::string& name) { return std::string(AGC_SCENARIO_DIR) + "/" + name; }

  std::string tiny_training() const {
    return write("tiny",
                 "horizon = 5\n[load]\narea = 1\nstart = 1\nmagnitude = 0.01\n"
                 "[training]\nepisodes = 2\nseed = 4\nhidden = 8\nbatch_size = 16\nlevels = 3\n"
                 "load_start_max = 2\nattack_start_min = 1\nattack_start_max = 3\n");
  }

  fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 64);
  EXPECT_EQ(run("bogus"), 64);
  EXPECT_EQ(run("evaluate " + scenario("scenario_a")), 64);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, SimulateWritesTrajectoryAndMetrics) {
  ASSERT_EQ(run("simulate " + scenario("scenario_a") + " --out " + path("a.csv") + " --metrics " + path("m.csv")), 0);
  const std::string csv = read(path("a.csv"));
  EXPECT_EQ(csv.rfind("t,df_1,df_2,pm_1,pm_2,pv_1,pv_2,tie_1_2,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6002);
  const std::string metrics = read(path("m.csv"));
  EXPECT_EQ(metrics.rfind("controller,max_abs_df_1", 0), 0u);
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 2);
}

TEST_F(Cli, SimulateIsBitIdenticalAcrossRuns) {
  ASSERT_EQ(run("simulate " + scenario("scenario_b") + " --out " + path("1.csv")), 0);
  ASSERT_EQ(run("simulate " + scenario("scenario_b") + " --out " + path("2.csv")), 0);
  EXPECT_EQ(read(path("1.csv")), read(path("2.csv")));
}

TEST_F(Cli, ParseErrorsExitWithTwo) {
  EXPECT_EQ(run("simulate " + write("bad", "[load]\narea = 1\nmagnitudee = 0.01\n")), 2);
  EXPECT_NE(read(path("stderr")).find("magnitudee"), std::string::npos);
  EXPECT_EQ(run("evaluate " + scenario("scenario_a") + " --controller fuzzy"), 2);
}

TEST_F(Cli, InstabilityExitsWithThree) {
  EXPECT_EQ(run("evaluate " + write("blowup", "[load]\narea = 1\nmagnitude = 100\n") + " --controller zero"), 3);
  EXPECT_NE(read(path("stderr")).find("t="), std::string::npos);
}

TEST_F(Cli, MissingFilesExitWithSeven) {
  EXPECT_EQ(run("simulate " + path("does_not_exist")), 7);
  EXPECT_EQ(run("evaluate " + scenario("scenario_a") + " --controller dqn:" + path("none.qnet")), 7);
}

TEST_F(Cli, TunePidPrintsAControllerSection) {
  ASSERT_EQ(run("tune-pid " + scenario("scenario_a") + " --points 5"), 0);
  const std::string out = read(path("stdout"));
  EXPECT_NE(out.find("[controller]\ntype = pid\nkp = "), std::string::npos);
  EXPECT_EQ(out.rfind("# cost ", 0), 0u);
}

TEST_F(Cli, CompareReportsEveryRow) {
  ASSERT_EQ(run("compare " + scenario("scenario_a") + " --controllers zero,lqr,dqn:" + path("none.qnet") + " --csv " +
                path("cmp.csv")),
            0);
  const std::string csv = read(path("cmp.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(read(path("stderr")).find("none.qnet"), std::string::npos);
}

TEST_F(Cli, TrainIsDeterministicAndEvaluatesTheCheckpoint) {
  const std::string cfg = tiny_training();
  ASSERT_EQ(run("train " + cfg + " --checkpoint " + path("1.qnet") + " --log " + path("1.log")), 0);
  ASSERT_EQ(run("train " + cfg + " --checkpoint " + path("2.qnet") + " --log " + path("2.log")), 0);
  EXPECT_EQ(read(path("1.qnet")), read(path("2.qnet")));
  EXPECT_EQ(read(path("1.log")), read(path("2.log")));
  ASSERT_EQ(run("train " + cfg + " --episodes 2 --seed 5 --checkpoint " + path("3.qnet")), 0);
  EXPECT_NE(read(path("1.qnet")), read(path("3.qnet")));
  EXPECT_EQ(run("evaluate " + cfg + " --controller dqn:" + path("1.qnet") + " --metrics " + path("m.csv")), 0);
  EXPECT_TRUE(fs::exists(path("m.csv")));
  const std::string three = write("three", "[area]\n[area]\n[area]\n[tie]\nareas = 1 2\ncoefficient = 0.1\n"
                                           "[tie]\nareas = 2 3\ncoefficient = 0.1\n");
  EXPECT_EQ(run("evaluate " + three + " --controller dqn:" + path("1.qnet")), 8);
}

}  // namespace
