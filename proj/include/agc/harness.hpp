#pragma once

// Closed-loop episode execution: plant + attacks + controller, with the
// trajectory record, metrics and CSV persistence.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agc/controller.hpp"
#include "agc/dqn_agent.hpp"
#include "agc/error.hpp"
#include "agc/fdia.hpp"
#include "agc/lfc_dynamics.hpp"
#include "agc/scenario.hpp"
#include "agc/text_io.hpp"

namespace agc {

/// One row per plant step. Measurements and commands are the values in
/// force over [time, time + h): they change only at control instants.
/// `reward` is the reward of the control period that ends at this row, and
/// zero on rows that are not control boundaries.
struct TrajectorySample {
  double time = 0.0;
  SystemState state;
  Eigen::VectorXd measured_frequency;
  Eigen::VectorXd measured_tie;
  Eigen::VectorXd command;    // issued by the controller
  Eigen::VectorXd delivered;  // after control-channel corruption
  double reward = 0.0;

  friend bool operator==(const TrajectorySample& a, const TrajectorySample& b) {
    return a.time == b.time && a.state == b.state && a.measured_frequency == b.measured_frequency &&
           a.measured_tie == b.measured_tie && a.command == b.command && a.delivered == b.delivered &&
           a.reward == b.reward;
  }
};

struct Trajectory {
  std::size_t areas = 0;
  std::vector<TrajectorySample> samples;

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.areas == b.areas && a.samples == b.samples;
  }
};

/// Deviation beyond which the linear model is considered blown up.
inline constexpr double divergence_limit = 10.0;

/// Step-by-step closed loop. Each control period: measure the true state,
/// corrupt the measurements, take the controller's commands, corrupt them,
/// and integrate the plant with RK4 over the period holding the delivered
/// commands.
class ClosedLoop {
 public:
  explicit ClosedLoop(Scenario scenario, bool record = true) : sc_(std::move(scenario)), record_(record) {
    sc_.validate();
    ratio_ = sc_.control_ratio();
    total_periods_ = sc_.control_steps();
    reset();
  }

  void reset() {
    state_ = SystemState(sc_.areas());
    period_ = 0;
    pending_reward_ = 0.0;
    trajectory_ = Trajectory{sc_.areas(), {}};
    if (record_) trajectory_.samples.reserve(total_periods_ * ratio_ + 1);
    frame_ = corrupt_measurements(MeasurementFrame::from_state(state_, 0.0), sc_.attacks, 0.0);
  }

  const Scenario& scenario() const { return sc_; }
  bool done() const { return period_ >= total_periods_; }
  std::size_t period() const { return period_; }
  std::size_t periods() const { return total_periods_; }
  double time() const { return sample_time(period_ * ratio_); }
  const SystemState& state() const { return state_; }

  /// What the controller sees at the current control instant.
  const MeasurementFrame& measurement() const { return frame_; }

  /// Applies `command` for one control period and returns the reward.
  double step(const Eigen::VectorXd& command) {
    if (done()) throw StructuralError("episode already finished");
    if (static_cast<std::size_t>(command.size()) != sc_.areas())
      throw StructuralError("controller returned " + std::to_string(command.size()) + " commands for " +
                            std::to_string(sc_.areas()) + " areas");
    const std::size_t first = period_ * ratio_;
    const double t0 = sample_time(first);
    const Eigen::VectorXd delivered = corrupt_control(command, sc_.attacks, t0);
    const SystemState start = state_;
    PlantInputs inputs = PlantInputs::zero(sc_.areas());
    inputs.command = delivered;

    for (std::size_t s = 0; s < ratio_; ++s) {
      const std::size_t k = first + s;
      const double t = sample_time(k);
      if (record_) push_sample(t, command, delivered, s == 0 ? pending_reward_ : 0.0);
      for (Eigen::Index i = 0; i < inputs.load.size(); ++i) inputs.load[i] = 0.0;
      for (const auto& e : sc_.loads) inputs.load[static_cast<Eigen::Index>(e.area)] += load_value(e, t);
      state_ = rk4_step(state_, inputs, sc_.grid, sc_.plant_step);
      const double worst = state_.vector().cwiseAbs().maxCoeff();
      if (!(worst <= divergence_limit)) {
        const double when = sample_time(k + 1);
        throw InstabilityError("state deviation " + text::format_double(worst) + " p.u. exceeds " +
                                   text::format_double(divergence_limit) + " at t=" + text::format_double(when) + " s",
                               when);
      }
    }
    const double r = reward(start, state_, sc_.grid, sc_.control_period, sc_.reward_rule);
    pending_reward_ = r;
    last_command_ = command;
    last_delivered_ = delivered;
    ++period_;
    frame_ = corrupt_measurements(MeasurementFrame::from_state(state_, time()), sc_.attacks, time());
    if (done() && record_) push_sample(time(), last_command_, last_delivered_, pending_reward_);
    return r;
  }

  const Trajectory& trajectory() const { return trajectory_; }
  Trajectory take_trajectory() { return std::move(trajectory_); }

 private:
  double sample_time(std::size_t k) const { return static_cast<double>(k) * sc_.plant_step; }

  void push_sample(double t, const Eigen::VectorXd& command, const Eigen::VectorXd& delivered, double r) {
    trajectory_.samples.push_back(
        TrajectorySample{t, state_, frame_.frequency, frame_.net_tie, command, delivered, r});
  }

  Scenario sc_;
  bool record_;
  std::size_t ratio_ = 1;
  std::size_t total_periods_ = 0;
  SystemState state_;
  std::size_t period_ = 0;
  double pending_reward_ = 0.0;
  MeasurementFrame frame_;
  Eigen::VectorXd last_command_;
  Eigen::VectorXd last_delivered_;
  Trajectory trajectory_;
};

inline Trajectory run_episode(const Scenario& scenario, Controller& controller) {
  ClosedLoop loop(scenario, true);
  controller.reset();
  while (!loop.done()) loop.step(controller.observe(loop.measurement()));
  return loop.take_trajectory();
}

/// Sum of the logged per-period rewards.
inline double cumulative_reward(const Trajectory& t) {
  double sum = 0.0;
  for (const auto& s : t.samples) sum += s.reward;
  return sum;
}

// ---------------------------------------------------------------------------
// Metrics

struct AreaMetrics {
  double max_abs_frequency = 0.0;
  std::optional<double> settling_time;  // empty: not settled by the horizon
  double steady_abs_frequency = 0.0;    // mean |df| over the final window
  double ise = 0.0;                     // integral of (beta df)^2 + (net tie)^2
};

struct Metrics {
  std::vector<AreaMetrics> areas;
  double ise_total = 0.0;
  double cumulative_reward = 0.0;
};

/// Settling time is the first sample after the last one outside the band;
/// a trajectory whose final sample is outside the band has not settled.
inline Metrics compute_metrics(const Trajectory& traj, const Grid& grid, double band, double steady_window) {
  if (traj.samples.empty()) throw StructuralError("cannot compute metrics of an empty trajectory");
  if (traj.areas != grid.area_count()) throw StructuralError("trajectory and grid disagree on area count");
  const auto& s = traj.samples;
  const double end = s.back().time;
  Metrics m;
  m.areas.resize(traj.areas);
  for (std::size_t i = 0; i < traj.areas; ++i) {
    AreaMetrics& a = m.areas[i];
    const double beta = grid.areas[i].frequency_bias;
    std::optional<std::size_t> last_out;
    double window_sum = 0.0;
    std::size_t window_count = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double f = std::abs(s[k].state.frequency(i));
      a.max_abs_frequency = std::max(a.max_abs_frequency, f);
      if (!(f < band)) last_out = k;
      if (s[k].time >= end - steady_window) {
        window_sum += f;
        ++window_count;
      }
      if (k > 0) {
        auto integrand = [&](const SystemState& x) {
          const double bf = beta * x.frequency(i);
          const double tie = x.net_tie(i);
          return bf * bf + tie * tie;
        };
        a.ise += 0.5 * (s[k].time - s[k - 1].time) * (integrand(s[k - 1].state) + integrand(s[k].state));
      }
    }
    if (!last_out)
      a.settling_time = s.front().time;
    else if (*last_out + 1 < s.size())
      a.settling_time = s[*last_out + 1].time;
    a.steady_abs_frequency = window_count ? window_sum / static_cast<double>(window_count) : 0.0;
    m.ise_total += a.ise;
  }
  m.cumulative_reward = cumulative_reward(traj);
  return m;
}

inline Metrics compute_metrics(const Trajectory& traj, const Scenario& sc) {
  return compute_metrics(traj, sc.grid, sc.settling_band, sc.steady_window);
}

// ---------------------------------------------------------------------------
// CSV
//
// Columns: t, df_i (N), pm_i (N), pv_i (N), tie_i_j (pairs), meas_df_i (N),
// meas_tie_i (N), cmd_i (N), cmd_delivered_i (N), reward. Area numbers are
// 1-based. Numbers use shortest round-trip decimal text.

inline std::vector<std::string> trajectory_columns(std::size_t n) {
  std::vector<std::string> c{"t"};
  for (const char* p : {"df_", "pm_", "pv_"})
    for (std::size_t i = 0; i < n; ++i) c.push_back(p + std::to_string(i + 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c.push_back("tie_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  for (const char* p : {"meas_df_", "meas_tie_", "cmd_", "cmd_delivered_"})
    for (std::size_t i = 0; i < n; ++i) c.push_back(p + std::to_string(i + 1));
  c.push_back("reward");
  return c;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.areas;
  const auto cols = trajectory_columns(n);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  using text::format_double;
  for (const auto& s : traj.samples) {
    os << format_double(s.time);
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(s.state.frequency(i));
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(s.state.mechanical(i));
    for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(s.state.valve(i));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) os << ',' << format_double(s.state.tie(i, j));
    for (const Eigen::VectorXd* v : {&s.measured_frequency, &s.measured_tie, &s.command, &s.delivered})
      for (Eigen::Index i = 0; i < v->size(); ++i) os << ',' << format_double((*v)[i]);
    os << ',' << format_double(s.reward) << '\n';
  }
}

inline Trajectory read_trajectory_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("trajectory CSV is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) names.push_back(tok);
  }
  std::size_t n = 0;
  while (n < names.size() && names.size() > 1 + n && names[1 + n] == "df_" + std::to_string(n + 1)) ++n;
  if (n == 0 || names != trajectory_columns(n)) throw IoError("unexpected trajectory CSV header");

  Trajectory traj{n, {}};
  std::string line;
  std::size_t line_no = 1;
  const auto nn = static_cast<Eigen::Index>(n);
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto d = text::parse_double(tok);
      if (!d) throw IoError("bad number '" + tok + "' on CSV line " + std::to_string(line_no));
      v.push_back(*d);
    }
    if (v.size() != names.size()) throw IoError("wrong column count on CSV line " + std::to_string(line_no));
    TrajectorySample s;
    std::size_t c = 0;
    s.time = v[c++];
    s.state = SystemState(n);
    for (std::size_t i = 0; i < n; ++i) s.state.set_frequency(i, v[c++]);
    for (std::size_t i = 0; i < n; ++i) s.state.set_mechanical(i, v[c++]);
    for (std::size_t i = 0; i < n; ++i) s.state.set_valve(i, v[c++]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s.state.set_tie(i, j, v[c++]);
    for (Eigen::VectorXd* vec : {&s.measured_frequency, &s.measured_tie, &s.command, &s.delivered}) {
      vec->resize(nn);
      for (Eigen::Index i = 0; i < nn; ++i) (*vec)[i] = v[c++];
    }
    s.reward = v[c++];
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_trajectory_csv(os, traj);
  if (!os) throw IoError("failed writing: " + path);
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  try {
    return read_trajectory_csv(is);
  } catch (const IoError& e) {
    throw IoError(std::string(e.what()) + " (" + path + ")");
  }
}

}  // namespace agc
