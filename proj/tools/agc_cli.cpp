#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agc/agc.hpp"

namespace {

enum ExitCode : int {
  ok = 0,
  failure = 1,
  parse_failure = 2,
  instability = 3,
  convergence = 4,
  numeric = 5,
  tuning = 6,
  io = 7,
  structural = 8,
  usage = 64,
};

std::vector<std::pair<std::string, agc::ControllerSpec>> parse_controller_list(const std::string& list) {
  std::vector<std::pair<std::string, agc::ControllerSpec>> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = std::string(agc::text::trim(item));
    if (item.empty()) continue;
    out.emplace_back(item, agc::parse_controller_spec(item));
  }
  return out;
}

void write_metrics(const std::string& path, const std::vector<agc::ComparisonRow>& rows, std::size_t areas) {
  std::ofstream os(path);
  if (!os) throw agc::IoError("cannot open for writing: " + path);
  agc::write_metrics_csv(os, rows, areas);
  if (!os) throw agc::IoError("failed writing: " + path);
}

agc::ComparisonRow run_one(const agc::Scenario& sc, const std::string& label, const agc::ControllerSpec& spec,
                           const std::string& trajectory_path) {
  auto controller = agc::make_controller(spec, sc);
  const agc::Trajectory traj = agc::run_episode(sc, *controller);
  if (!trajectory_path.empty()) agc::write_trajectory_csv(trajectory_path, traj);
  return {label, agc::compute_metrics(traj, sc), {}};
}

int report(const agc::ComparisonRow& row, std::size_t areas, const std::string& metrics_path) {
  std::cout << agc::format_metrics_table({row}, areas);
  if (!metrics_path.empty()) write_metrics(metrics_path, {row}, areas);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load-frequency control simulator with false data injection attacks and a DQN controller"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, metrics_path, controller_text, checkpoint_path, log_path;
  std::size_t episodes = 0;
  std::uint64_t seed = 0;
  std::size_t points = 13;

  auto* simulate = app.add_subcommand("simulate", "Run the scenario with its own controller");
  simulate->add_option("scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--out", out_path, "Trajectory CSV output");
  simulate->add_option("--metrics", metrics_path, "Metrics CSV output");

  auto* train = app.add_subcommand("train", "Train a DQN on the scenario's training distribution");
  train->add_option("scenario", scenario_path, "Scenario file with a [training] section")->required();
  auto* episodes_opt = train->add_option("--episodes", episodes, "Episode count (default from the file)");
  auto* seed_opt = train->add_option("--seed", seed, "Random seed (default from the file)");
  train->add_option("--checkpoint", checkpoint_path, "Checkpoint output")->required();
  train->add_option("--log", log_path, "Training log CSV output");

  auto* evaluate = app.add_subcommand("evaluate", "Run the scenario with the given controller");
  evaluate->add_option("scenario", scenario_path, "Scenario file")->required();
  evaluate->add_option("--controller", controller_text, "Controller spec, e.g. pid, pid:kp=0.1:ki=0.7, dqn:model.qnet")
      ->required();
  evaluate->add_option("--out", out_path, "Trajectory CSV output");
  evaluate->add_option("--metrics", metrics_path, "Metrics CSV output");

  auto* compare = app.add_subcommand("compare", "Run several controllers on the same scenario");
  compare->add_option("scenario", scenario_path, "Scenario file")->required();
  compare->add_option("--controllers", controller_text, "Comma-separated controller specs")->required();
  compare->add_option("--csv", metrics_path, "Metrics CSV output");

  auto* tune = app.add_subcommand("tune-pid", "Grid-search PID gains on the attack-free scenario");
  tune->add_option("scenario", scenario_path, "Scenario file")->required();
  tune->add_option("--points", points, "Grid points per gain axis")->check(CLI::Range(1, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    agc::Scenario sc = agc::load_scenario(scenario_path);

    if (simulate->parsed()) {
      const std::string label(agc::to_string(sc.controller.type));
      return report(run_one(sc, label, sc.controller, out_path), sc.areas(), metrics_path);
    }

    if (evaluate->parsed()) {
      const agc::ControllerSpec spec = agc::parse_controller_spec(controller_text);
      return report(run_one(sc, controller_text, spec, out_path), sc.areas(), metrics_path);
    }

    if (compare->parsed()) {
      const auto rows = agc::compare(sc, parse_controller_list(controller_text));
      std::cout << agc::format_metrics_table(rows, sc.areas());
      if (!metrics_path.empty()) write_metrics(metrics_path, rows, sc.areas());
      for (const auto& r : rows)
        if (!r.error.empty()) std::cerr << r.label << ": " << r.error << '\n';
      return ok;
    }

    if (train->parsed()) {
      if (episodes_opt->count() == 0) episodes = sc.training.episodes;
      if (seed_opt->count() == 0) seed = sc.training.seed;
      const agc::TrainingResult result = agc::train(sc, episodes, seed);
      agc::save_checkpoint(checkpoint_path, result.policy);
      if (!log_path.empty()) agc::write_training_log_csv(log_path, result.log);
      std::cout << "episodes " << result.log.size() << ", train steps " << result.train_steps << '\n';
      if (!result.log.empty())
        std::cout << "last episode return " << agc::text::format_double(result.log.back().episode_return) << '\n';
      return ok;
    }

    if (tune->parsed()) {
      agc::PidTuningGrid grid;
      grid.points = points;
      const agc::PidTuningResult r = agc::tune_pid(sc, grid);
      std::cout << "# cost " << agc::text::format_double(r.cost) << ", " << r.candidates << " candidates, "
                << r.unstable << " rejected\n";
      std::cout << agc::format_pid_section({r.gains});
      return ok;
    }
  } catch (const agc::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return parse_failure;
  } catch (const agc::InstabilityError& e) {
    std::cerr << "instability: " << e.what() << '\n';
    return instability;
  } catch (const agc::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return convergence;
  } catch (const agc::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return numeric;
  } catch (const agc::TuningError& e) {
    std::cerr << "tuning failed: " << e.what() << '\n';
    return tuning;
  } catch (const agc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io;
  } catch (const agc::StructuralError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return structural;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}
