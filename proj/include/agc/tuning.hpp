#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "agc/baseline_controllers.hpp"
#include "agc/error.hpp"
#include "agc/harness.hpp"
#include "agc/scenario.hpp"

namespace agc {

/// Logarithmic (Kp, Ki) grid. `points` values per axis, endpoints included.
/// A grid with 2*points - 1 points contains every point of the coarser one
/// exactly.
struct PidTuningGrid {
  double kp_min = 0.01;
  double kp_max = 3.0;
  double ki_min = 0.01;
  double ki_max = 3.0;
  std::size_t points = 13;
  double kd = 0.0;
  double filter = 10.0;

  static std::vector<double> axis(double lo, double hi, std::size_t points) {
    if (points == 0 || !(lo > 0) || !(hi >= lo)) throw TuningError("invalid tuning axis");
    if (points == 1) return {lo};
    std::vector<double> v(points);
    const double ratio = std::log(hi / lo);
    for (std::size_t k = 0; k < points; ++k)
      v[k] = k + 1 == points ? hi
                             : (k == 0 ? lo : lo * std::exp(ratio * (static_cast<double>(k) / static_cast<double>(points - 1))));
    return v;
  }

  PidTuningGrid refined() const {
    PidTuningGrid g = *this;
    g.points = points > 1 ? 2 * points - 1 : 1;
    return g;
  }
};

struct PidTuningResult {
  PidGains gains;
  double cost = 0.0;
  std::size_t candidates = 0;
  std::size_t unstable = 0;
};

/// Episode used for tuning: the scenario without attacks, with a 0.01 p.u.
/// step on area 1 at t = 1 s when the scenario has no load events.
inline Scenario tuning_episode(const Scenario& scenario) {
  Scenario s = scenario.without_attacks();
  if (s.loads.empty()) s.loads.push_back(LoadEvent{0, LoadKind::step, 1.0, 0.01});
  return s;
}

/// Cost of one candidate: integral over the episode of
/// sum_i (beta_i df_i)^2 + (net tie_i)^2. Empty when the closed loop
/// diverges or does not settle inside the band.
inline std::optional<double> pid_episode_cost(const Scenario& episode, const PidGains& gains) {
  PidController pid(episode.grid, {gains}, episode.control_period);
  try {
    const Trajectory t = run_episode(episode, pid);
    const Metrics m = compute_metrics(t, episode);
    if (!std::isfinite(m.ise_total)) return std::nullopt;
    for (const auto& a : m.areas)
      if (!a.settling_time) return std::nullopt;
    return m.ise_total;
  } catch (const InstabilityError&) {
    return std::nullopt;
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

/// Grid search for the same gains on every area. Ties go to the smallest
/// Ki, then the smallest Kp.
inline PidTuningResult tune_pid(const Scenario& scenario, const PidTuningGrid& grid = {}) {
  const Scenario episode = tuning_episode(scenario);
  const auto kps = PidTuningGrid::axis(grid.kp_min, grid.kp_max, grid.points);
  const auto kis = PidTuningGrid::axis(grid.ki_min, grid.ki_max, grid.points);
  PidTuningResult best;
  best.cost = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double ki : kis) {
    for (double kp : kps) {
      ++best.candidates;
      const PidGains g{kp, ki, grid.kd, grid.filter};
      const auto cost = pid_episode_cost(episode, g);
      if (!cost) {
        ++best.unstable;
        continue;
      }
      // iteration runs in increasing (Ki, Kp), so strict improvement keeps
      // the smallest gains among equal costs
      if (*cost < best.cost) {
        best.cost = *cost;
        best.gains = g;
        found = true;
      }
    }
  }
  if (!found) throw TuningError("every PID candidate diverged or failed to settle");
  return best;
}

}  // namespace agc
