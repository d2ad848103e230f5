#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "agc/agc.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string scenario_path(const std::string& name) { return std::string(AGC_SCENARIO_DIR) + "/" + name; }

std::string cli() { return AGC_CLI_PATH; }

/// Value of `column` in the first data row of a metrics CSV.
double metrics_value(const std::string& path, const std::string& column) {
  std::istringstream is(read_file(path));
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  std::vector<std::string> names, cells;
  for (auto [text, out] : {std::pair{&header, &names}, std::pair{&row, &cells}}) {
    std::stringstream ss(*text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out->push_back(tok);
  }
  const auto it = std::find(names.begin(), names.end(), column);
  if (it == names.end() || static_cast<std::size_t>(it - names.begin()) >= cells.size())
    throw agc::IoError("column " + column + " missing in " + path);
  const auto v = agc::text::parse_double(cells[static_cast<std::size_t>(it - names.begin())]);
  if (!v) throw agc::IoError("column " + column + " is not numeric in " + path);
  return *v;
}

// 1. RK4 against the matrix-exponential solution of the two-area model.
Outcome dynamics_oracle() {
  const agc::Grid grid = agc::Grid::two_area_benchmark();
  const agc::LinearModel lm = agc::assemble_linear_model(grid);
  agc::PlantInputs inputs = agc::PlantInputs::zero(2);
  inputs.command << 0.004, -0.002;
  inputs.load << 0.01, 0.0;
  const Eigen::VectorXd c = lm.B * inputs.command + lm.E * inputs.load;
  agc::SystemState x0(2);
  x0.set_frequency(1, 0.002);
  x0.set_tie(0, 1, -0.001);

  auto max_error = [&](double h, double horizon) {
    const auto steps = static_cast<std::size_t>(std::llround(horizon / h));
    agc::SystemState x = x0;
    double worst = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      x = agc::rk4_step(x, inputs, grid, h);
      if (k % static_cast<std::size_t>(std::llround(0.1 / h)) == 0 || k == steps) {
        const Eigen::VectorXd exact =
            agc::testing::exact_affine_response(lm.A, c, x0.vector(), static_cast<double>(k) * h);
        worst = std::max(worst, (x.vector() - exact).cwiseAbs().maxCoeff());
      }
    }
    return worst;
  };

  const auto t0 = Clock::now();
  const double err = max_error(0.001, 10.0);
  const double runtime = seconds_since(t0);
  const double coarse = max_error(0.05, 10.0);
  const double fine = max_error(0.025, 10.0);
  const double order = std::log2(coarse / fine);
  return {err < 1e-7 && order >= 3.8 && runtime < 5.0,
          "max error " + num(err) + " (< 1e-7), order " + num(order) + " (>= 3.8), runtime " + num(runtime) +
              " s (< 5 s)"};
}

agc::Trajectory run_spec(const agc::Scenario& sc, const agc::ControllerSpec& spec) {
  auto controller = agc::make_controller(spec, sc);
  return agc::run_episode(sc, *controller);
}

// 2. Tuned PID regulates a 0.01 p.u. step load without attacks.
Outcome pid_regulates(const agc::Scenario& scenario_a) {
  const agc::Scenario clean = scenario_a.without_attacks();
  const agc::Trajectory t = run_spec(clean, agc::parse_controller_spec("pid"));
  double worst = 0.0;
  for (const auto& s : t.samples)
    if (s.time >= 40.0)
      for (std::size_t i = 0; i < clean.areas(); ++i) worst = std::max(worst, std::abs(s.state.frequency(i)));
  return {worst < 1e-3, "max |df| over t in [40, 60] s = " + num(worst) + " p.u. (< 1e-3)"};
}

// 3. Tuned PID keeps a frequency offset under the scenario (a) sensor attack.
Outcome pid_fails_under_attack(double pid_steady) {
  return {pid_steady >= 5e-3, "PID steady-state |df_2| = " + num(pid_steady) + " p.u. (>= 5e-3)"};
}

// 4. A desk-scale trained DQN restores frequency under the same attack.
Outcome dqn_resilience(const agc::Scenario& scenario_a, const agc::DqnPolicy& policy, std::size_t episodes,
                       double train_seconds, double pid_steady) {
  agc::DqnController dqn(policy, scenario_a.grid.command_limit);
  const agc::Metrics m = agc::compute_metrics(agc::run_episode(scenario_a, dqn), scenario_a);
  const double dqn_steady = m.areas[1].steady_abs_frequency;
  const bool pass = episodes <= 500 && train_seconds <= 900.0 && dqn_steady < pid_steady &&
                    dqn_steady <= 0.5 * pid_steady;
  return {pass, "DQN steady-state |df_2| = " + num(dqn_steady) + " p.u. vs PID " + num(pid_steady) +
                    " (must be < and <= half = " + num(0.5 * pid_steady) + "); " + std::to_string(episodes) +
                    " episodes in " + num(train_seconds) + " s"};
}

// 5. Equation-level unit suites.
Outcome unit_suites() {
  struct Suite {
    std::string binary;
    std::string filter;
  };
  const std::vector<Suite> suites{
      {AGC_TEST_DQN, "SelectAction.*:TdTarget.*:TrainStep.*:Reward.*:QNetwork.GradientMatchesCentralDifferences"},
      {AGC_TEST_LINALG, "Dare.ScalarGoldenRatio:Dare.BenchmarkResidualAndStableClosedLoop:Mpc.EqualsLqrWithRiccatiTerminalCost"},
  };
  bool pass = true;
  std::string detail;
  for (const auto& s : suites) {
    const int rc = run_command(s.binary + " --gtest_brief=1 --gtest_filter='" + s.filter + "' > /dev/null 2>&1");
    pass = pass && rc == 0;
    detail += (detail.empty() ? "" : "; ") + fs::path(s.binary).filename().string() + " [" + s.filter + "] " +
              (rc == 0 ? "passed" : "failed (exit " + std::to_string(rc) + ")");
  }
  return {pass, detail};
}

// 6. Repeated simulate and train runs are bit-identical.
Outcome determinism(const fs::path& dir, const std::string& in_process_checkpoint) {
  bool pass = true;
  std::string detail;
  for (const char* name : {"scenario_a", "scenario_b", "scenario_c"}) {
    const std::string a = (dir / (std::string(name) + "_1.csv")).string();
    const std::string b = (dir / (std::string(name) + "_2.csv")).string();
    const int ra = run_command(cli() + " simulate " + scenario_path(name) + " --out " + a + " > /dev/null");
    const int rb = run_command(cli() + " simulate " + scenario_path(name) + " --out " + b + " > /dev/null");
    const bool same = ra == 0 && rb == 0 && read_file(a) == read_file(b) && !read_file(a).empty();
    pass = pass && same;
    detail += std::string(name) + " CSV " + (same ? "identical" : "DIFFERENT") + "; ";
  }
  const std::string ckpt = (dir / "cli.qnet").string();
  const int rc = run_command(cli() + " train " + scenario_path("training") + " --checkpoint " + ckpt + " > /dev/null");
  const bool same = rc == 0 && read_file(ckpt) == in_process_checkpoint;
  pass = pass && same;
  detail += std::string("train checkpoint ") + (same ? "identical" : "DIFFERENT");
  return {pass, detail};
}

// 7. Scenarios (b) and (c) end to end with the trained DQN.
Outcome scenarios_b_and_c(const fs::path& dir, const std::string& checkpoint) {
  bool pass = true;
  std::string detail;
  for (const char* name : {"scenario_b", "scenario_c"}) {
    const std::string dqn_metrics = (dir / (std::string(name) + "_dqn_metrics.csv")).string();
    const std::string zero_metrics = (dir / (std::string(name) + "_zero_metrics.csv")).string();
    const int rd = run_command(cli() + " evaluate " + scenario_path(name) + " --controller dqn:" + checkpoint +
                               " --metrics " + dqn_metrics + " > /dev/null");
    const int rz = run_command(cli() + " evaluate " + scenario_path(name) + " --controller zero --metrics " +
                               zero_metrics + " > /dev/null");
    if (rd != 0 || rz != 0 || !fs::exists(dqn_metrics) || !fs::exists(zero_metrics)) {
      pass = false;
      detail += std::string(name) + ": evaluate exited " + std::to_string(rd) + "/" + std::to_string(rz) + "; ";
      continue;
    }
    const double dqn = metrics_value(dqn_metrics, "cumulative_reward");
    const double zero = metrics_value(zero_metrics, "cumulative_reward");
    pass = pass && dqn > zero;
    detail += std::string(name) + ": DQN reward " + num(dqn) + " vs zero " + num(zero) + "; ";
  }
  return {pass, detail};
}

void report(int id, const std::string& title, const Outcome& o, bool& all) {
  all = all && o.pass;
  std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << title << ": " << o.detail << std::endl;
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("error: ") + e.what()};
  }
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / ("agc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  bool all = true;

  report(1, "RK4 matches matrix-exponential oracle", guarded(dynamics_oracle), all);

  const agc::Scenario scenario_a = agc::load_scenario(scenario_path("scenario_a"));
  report(2, "Tuned PID regulates an unattacked step load", guarded([&] { return pid_regulates(scenario_a); }), all);

  double pid_steady = std::nan("");
  const Outcome c3 = guarded([&] {
    const agc::Trajectory t = run_spec(scenario_a, agc::parse_controller_spec("pid"));
    pid_steady = agc::compute_metrics(t, scenario_a).areas[1].steady_abs_frequency;
    return pid_fails_under_attack(pid_steady);
  });
  report(3, "Tuned PID keeps an offset under the frequency-sensor attack", c3, all);

  std::string checkpoint_text;
  const std::string checkpoint = (dir / "dqn.qnet").string();
  const Outcome c4 = guarded([&] {
    const agc::Scenario training = agc::load_scenario(scenario_path("training"));
    const auto t0 = Clock::now();
    const agc::TrainingResult r = agc::train(training, training.training.episodes, training.training.seed);
    const double train_seconds = seconds_since(t0);
    agc::save_checkpoint(checkpoint, r.policy);
    checkpoint_text = read_file(checkpoint);
    return dqn_resilience(scenario_a, r.policy, training.training.episodes, train_seconds, pid_steady);
  });
  report(4, "Trained DQN restores frequency under the attack", c4, all);

  report(5, "Equation-level unit suites", guarded(unit_suites), all);

  report(6, "Repeated simulate/train runs are bit-identical",
         guarded([&] {
           if (checkpoint_text.empty()) return Outcome{false, "no trained checkpoint available"};
           return determinism(dir, checkpoint_text);
         }),
         all);

  report(7, "Scenarios (b) and (c) end to end",
         guarded([&] {
           if (checkpoint_text.empty()) return Outcome{false, "no trained checkpoint available"};
           return scenarios_b_and_c(dir, checkpoint);
         }),
         all);

  fs::remove_all(dir);
  std::cout << (all ? "all acceptance criteria passed" : "some acceptance criteria FAILED") << std::endl;
  return all ? 0 : 1;
}
