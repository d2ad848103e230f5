#pragma once

// Controller construction from specs and side-by-side comparison runs.

#include <cstddef>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agc/baseline_controllers.hpp"
#include "agc/controller.hpp"
#include "agc/dqn_agent.hpp"
#include "agc/error.hpp"
#include "agc/harness.hpp"
#include "agc/scenario.hpp"
#include "agc/text_io.hpp"
#include "agc/tuning.hpp"

namespace agc {

/// Parses `name[:key=value]...`, e.g. `pid:kp=0.4:ki=0.3`, `mpc:horizon=10`,
/// `dqn:checkpoint=model.qnet` (or `dqn:model.qnet`). Gains apply to every
/// area.
inline ControllerSpec parse_controller_spec(const std::string& text_spec) {
  std::vector<std::string> parts;
  {
    std::stringstream ss(text_spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
  }
  if (parts.empty()) throw ParseError("empty controller spec", 0);
  ControllerSpec spec;
  const auto type = controller_type_from(parts.front());
  if (!type) throw ParseError("unknown controller '" + parts.front() + "'", 0);
  spec.type = *type;
  PidGains gains;
  bool any_gain = false;
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const auto eq = parts[k].find('=');
    if (eq == std::string::npos) {
      if (spec.type == ControllerType::dqn && spec.checkpoint.empty()) {
        spec.checkpoint = parts[k];
        continue;
      }
      throw ParseError("expected key=value in controller spec, got '" + parts[k] + "'", 0);
    }
    const std::string key = parts[k].substr(0, eq);
    const std::string value = parts[k].substr(eq + 1);
    if (key == "checkpoint" && spec.type == ControllerType::dqn) {
      spec.checkpoint = value;
      continue;
    }
    const auto v = text::parse_double(value);
    if (!v) throw ParseError("controller option '" + key + "' expects a number", 0);
    if (spec.type == ControllerType::pid && (key == "kp" || key == "ki" || key == "kd" || key == "filter")) {
      (key == "kp" ? gains.kp : key == "ki" ? gains.ki : key == "kd" ? gains.kd : gains.filter) = *v;
      any_gain = key != "filter" || any_gain;
    } else if ((spec.type == ControllerType::lqr || spec.type == ControllerType::mpc) && key == "q_frequency_scale") {
      spec.q_frequency_scale = *v;
    } else if ((spec.type == ControllerType::lqr || spec.type == ControllerType::mpc) && key == "q_tie") {
      spec.q_tie = *v;
    } else if ((spec.type == ControllerType::lqr || spec.type == ControllerType::mpc) && key == "r_input") {
      spec.r_input = *v;
    } else if (spec.type == ControllerType::mpc && key == "horizon") {
      if (*v < 1 || *v != std::floor(*v)) throw ParseError("MPC horizon must be an integer >= 1", 0);
      spec.mpc_horizon = static_cast<std::size_t>(*v);
    } else {
      throw ParseError("unknown option '" + key + "' for controller " + parts.front(), 0);
    }
  }
  if (any_gain) {
    gains.validate();
    spec.pid = std::vector<PidGains>{gains};
  }
  if (spec.type == ControllerType::dqn && spec.checkpoint.empty())
    throw ParseError("dqn controller needs a checkpoint path", 0);
  return spec;
}

inline LqrWeights weights_for(const ControllerSpec& spec, const Scenario& sc) {
  LqrWeights w = LqrWeights::defaults(sc.grid, sc.control_period);
  const std::size_t n = sc.areas();
  if (spec.q_frequency_scale)
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = static_cast<Eigen::Index>(SystemState::frequency_slot(i));
      w.Q(f, f) *= *spec.q_frequency_scale;
    }
  if (spec.q_tie)
    for (auto t = static_cast<Eigen::Index>(3 * n); t < w.Q.rows(); ++t) w.Q(t, t) = *spec.q_tie;
  if (spec.r_input) w.R = *spec.r_input * Eigen::MatrixXd::Identity(w.R.rows(), w.R.cols());
  return w;
}

/// PID gains without explicit values are tuned on the scenario with its
/// attacks removed.
inline std::unique_ptr<Controller> make_controller(const ControllerSpec& spec, const Scenario& sc) {
  switch (spec.type) {
    case ControllerType::zero: return std::make_unique<ZeroController>(sc.areas());
    case ControllerType::pid: {
      std::vector<PidGains> gains = spec.pid ? *spec.pid : std::vector<PidGains>{tune_pid(sc).gains};
      return std::make_unique<PidController>(sc.grid, std::move(gains), sc.control_period);
    }
    case ControllerType::lqr: return std::make_unique<LqrController>(sc.grid, weights_for(spec, sc));
    case ControllerType::mpc:
      return std::make_unique<MpcController>(sc.grid, weights_for(spec, sc), spec.mpc_horizon);
    case ControllerType::dqn: {
      DqnPolicy p = load_checkpoint(spec.checkpoint);
      if (p.actions.areas() != sc.areas())
        throw StructuralError("checkpoint was trained for " + std::to_string(p.actions.areas()) + " areas");
      return std::make_unique<DqnController>(std::move(p), sc.grid.command_limit);
    }
  }
  throw StructuralError("unknown controller type");
}

struct ComparisonRow {
  std::string label;
  std::optional<Metrics> metrics;
  std::string error;
};

/// Runs every controller on the same scenario. A controller that fails to
/// build or run yields a row carrying the error; the others still run.
inline std::vector<ComparisonRow> compare(const Scenario& sc,
                                          const std::vector<std::pair<std::string, ControllerSpec>>& controllers) {
  std::vector<ComparisonRow> rows;
  for (const auto& [label, spec] : controllers) {
    ComparisonRow row{label, std::nullopt, {}};
    try {
      auto c = make_controller(spec, sc);
      row.metrics = compute_metrics(run_episode(sc, *c), sc);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::string> metrics_columns(std::size_t areas) {
  std::vector<std::string> c{"controller"};
  for (std::size_t i = 1; i <= areas; ++i) {
    const std::string a = std::to_string(i);
    c.insert(c.end(), {"max_abs_df_" + a, "settling_time_" + a, "steady_abs_df_" + a, "ise_" + a});
  }
  c.insert(c.end(), {"ise_total", "cumulative_reward", "error"});
  return c;
}

namespace detail {

inline std::vector<std::string> metrics_cells(const ComparisonRow& row, std::size_t areas, bool full_precision) {
  auto num = [&](double v) {
    if (full_precision) return text::format_double(v);
    std::ostringstream ss;
    ss << std::setprecision(4) << std::scientific << v;
    return ss.str();
  };
  std::vector<std::string> cells{row.label};
  for (std::size_t i = 0; i < areas; ++i) {
    if (!row.metrics) {
      cells.insert(cells.end(), {"", "", "", ""});
      continue;
    }
    const AreaMetrics& a = row.metrics->areas[i];
    cells.push_back(num(a.max_abs_frequency));
    cells.push_back(a.settling_time ? num(*a.settling_time) : "not-settled");
    cells.push_back(num(a.steady_abs_frequency));
    cells.push_back(num(a.ise));
  }
  if (row.metrics) {
    cells.push_back(num(row.metrics->ise_total));
    cells.push_back(num(row.metrics->cumulative_reward));
  } else {
    cells.insert(cells.end(), {"", ""});
  }
  cells.push_back(row.error);
  return cells;
}

}  // namespace detail

inline void write_metrics_csv(std::ostream& os, const std::vector<ComparisonRow>& rows, std::size_t areas) {
  const auto cols = metrics_columns(areas);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (const auto& r : rows) {
    const auto cells = detail::metrics_cells(r, areas, true);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string cell = cells[c];
      for (char& ch : cell)
        if (ch == ',' || ch == '\n') ch = ';';
      os << (c ? "," : "") << cell;
    }
    os << '\n';
  }
}

/// Column-aligned table for terminals.
inline std::string format_metrics_table(const std::vector<ComparisonRow>& rows, std::size_t areas) {
  std::vector<std::vector<std::string>> grid{metrics_columns(areas)};
  for (const auto& r : rows) grid.push_back(detail::metrics_cells(r, areas, false));
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream os;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      os << std::left << std::setw(static_cast<int>(width[c])) << line[c];
      if (c + 1 < line.size()) os << "  ";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace agc
