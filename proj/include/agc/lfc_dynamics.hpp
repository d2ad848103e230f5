#pragma once

// Linear load-frequency-control model of an N-area interconnected system.
//
// Each area carries three states: frequency deviation, mechanical power
// deviation (non-reheat turbine) and governor valve deviation. Tie-line flow
// deviations are stored once per unordered area pair (i < j); the reverse
// direction is always read as the negation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "agc/error.hpp"

namespace agc {

struct AreaParams {
  double inertia = 0.1667;          // M, p.u. s
  double damping = 0.0083;          // D
  double droop = 2.4;               // R
  double governor_time = 0.08;      // T_g, s
  double turbine_time = 0.3;        // T_t, s
  double frequency_bias = 0.425;    // beta

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(finite(inertia) && inertia > 0)) throw StructuralError("inertia must be > 0");
    if (!(finite(governor_time) && governor_time > 0))
      throw StructuralError("governor time constant must be > 0");
    if (!(finite(turbine_time) && turbine_time > 0))
      throw StructuralError("turbine time constant must be > 0");
    if (!(finite(droop) && droop > 0)) throw StructuralError("droop must be > 0");
    if (!(finite(damping) && damping >= 0)) throw StructuralError("damping must be >= 0");
    if (!(finite(frequency_bias) && frequency_bias > 0))
      throw StructuralError("frequency bias must be > 0");
  }

  friend bool operator==(const AreaParams&, const AreaParams&) = default;
};

/// Number of unordered area pairs.
constexpr std::size_t pair_count(std::size_t areas) { return areas * (areas - 1) / 2; }

/// Position of pair (i, j), i < j, in lexicographic pair order.
constexpr std::size_t pair_index(std::size_t areas, std::size_t i, std::size_t j) {
  return i * areas - i * (i + 1) / 2 + (j - i - 1);
}

/// Symmetric synchronizing coefficients T_ij (p.u. power per rad).
class TieTopology {
 public:
  TieTopology() = default;
  explicit TieTopology(std::size_t areas) : areas_(areas), coeff_(pair_count(areas), 0.0) {}

  std::size_t areas() const { return areas_; }

  double coefficient(std::size_t i, std::size_t j) const {
    check(i, j);
    if (i == j) return 0.0;
    return coeff_[index(i, j)];
  }

  void set_coefficient(std::size_t i, std::size_t j, double value) {
    check(i, j);
    if (i == j) throw StructuralError("a tie-line needs two distinct areas");
    if (!(std::isfinite(value) && value >= 0))
      throw StructuralError("synchronizing coefficient must be finite and >= 0");
    coeff_[index(i, j)] = value;
  }

  /// Coefficients in pair order.
  const std::vector<double>& pair_coefficients() const { return coeff_; }

  bool connected() const {
    if (areas_ <= 1) return true;
    std::vector<bool> seen(areas_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < areas_; ++b) {
        if (!seen[b] && coefficient(a, b) > 0) {
          seen[b] = true;
          stack.push_back(b);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
  }

 private:
  void check(std::size_t i, std::size_t j) const {
    if (i >= areas_ || j >= areas_)
      throw StructuralError("tie index (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") out of range for " + std::to_string(areas_) + " areas");
  }
  std::size_t index(std::size_t i, std::size_t j) const {
    return i < j ? pair_index(areas_, i, j) : pair_index(areas_, j, i);
  }

  std::size_t areas_ = 0;
  std::vector<double> coeff_;

 public:
  friend bool operator==(const TieTopology&, const TieTopology&) = default;
};

/// Flat state vector, area-major: [f_0, Pm_0, Pv_0, f_1, ..., tie pairs].
/// Also used for state derivatives, which share the layout.
class SystemState {
 public:
  SystemState() = default;
  explicit SystemState(std::size_t areas)
      : areas_(areas), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension(areas)))) {}
  SystemState(std::size_t areas, Eigen::VectorXd values) : areas_(areas), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != dimension(areas))
      throw StructuralError("state vector length " + std::to_string(values_.size()) +
                            " does not match " + std::to_string(areas) + " areas");
  }

  static constexpr std::size_t dimension(std::size_t areas) { return 3 * areas + pair_count(areas); }
  static constexpr std::size_t frequency_slot(std::size_t i) { return 3 * i; }
  static constexpr std::size_t mechanical_slot(std::size_t i) { return 3 * i + 1; }
  static constexpr std::size_t valve_slot(std::size_t i) { return 3 * i + 2; }
  static constexpr std::size_t tie_slot(std::size_t areas, std::size_t i, std::size_t j) {
    return 3 * areas + pair_index(areas, i, j);
  }

  std::size_t areas() const { return areas_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  double frequency(std::size_t i) const { return values_[at(frequency_slot(check(i)))]; }
  double mechanical(std::size_t i) const { return values_[at(mechanical_slot(check(i)))]; }
  double valve(std::size_t i) const { return values_[at(valve_slot(check(i)))]; }
  void set_frequency(std::size_t i, double v) { values_[at(frequency_slot(check(i)))] = v; }
  void set_mechanical(std::size_t i, double v) { values_[at(mechanical_slot(check(i)))] = v; }
  void set_valve(std::size_t i, double v) { values_[at(valve_slot(check(i)))] = v; }

  /// Flow deviation from area i toward area j; tie(j, i) == -tie(i, j).
  double tie(std::size_t i, std::size_t j) const {
    check(i);
    check(j);
    if (i == j) return 0.0;
    return i < j ? values_[at(tie_slot(areas_, i, j))] : -values_[at(tie_slot(areas_, j, i))];
  }
  void set_tie(std::size_t i, std::size_t j, double v) {
    check(i);
    check(j);
    if (i == j) throw StructuralError("no tie-line from an area to itself");
    if (i < j)
      values_[at(tie_slot(areas_, i, j))] = v;
    else
      values_[at(tie_slot(areas_, j, i))] = -v;
  }

  /// Net outgoing tie flow of area i.
  double net_tie(std::size_t i) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < areas_; ++j)
      if (j != i) sum += tie(i, j);
    return sum;
  }

  const Eigen::VectorXd& vector() const { return values_; }
  Eigen::VectorXd& vector() { return values_; }

  bool all_finite() const { return values_.allFinite(); }

  friend bool operator==(const SystemState& a, const SystemState& b) {
    return a.areas_ == b.areas_ && a.values_ == b.values_;
  }

 private:
  std::size_t check(std::size_t i) const {
    if (i >= areas_)
      throw StructuralError("area index " + std::to_string(i) + " out of range for " +
                            std::to_string(areas_) + " areas");
    return i;
  }
  static Eigen::Index at(std::size_t slot) { return static_cast<Eigen::Index>(slot); }

  std::size_t areas_ = 0;
  Eigen::VectorXd values_;
};

/// Per-area control command P_C and load disturbance. The plant saturates
/// commands; callers pass raw values.
struct PlantInputs {
  Eigen::VectorXd command;
  Eigen::VectorXd load;

  static PlantInputs zero(std::size_t areas) {
    const auto n = static_cast<Eigen::Index>(areas);
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
};

/// Physical description of the interconnection.
struct Grid {
  std::vector<AreaParams> areas;
  TieTopology ties;
  double command_limit = 0.5;  // |P_C| saturation applied by the plant

  std::size_t area_count() const { return areas.size(); }
  friend bool operator==(const Grid&, const Grid&) = default;

  void validate() const {
    if (areas.empty()) throw StructuralError("grid has no areas");
    if (ties.areas() != areas.size())
      throw StructuralError("tie topology covers " + std::to_string(ties.areas()) +
                            " areas but grid has " + std::to_string(areas.size()));
    for (const auto& a : areas) a.validate();
    if (!ties.connected()) throw StructuralError("tie-line graph is not connected");
    if (!(std::isfinite(command_limit) && command_limit > 0))
      throw StructuralError("command limit must be > 0");
  }

  /// Two identical areas with the classic Elgerd-style constants and
  /// 2*pi*T12 = 0.545 p.u./rad.
  static Grid two_area_benchmark() {
    Grid g;
    g.areas.assign(2, AreaParams{});
    g.ties = TieTopology(2);
    g.ties.set_coefficient(0, 1, 0.545 / (2.0 * std::numbers::pi));
    return g;
  }
};

namespace detail {

inline void check_dimensions(const SystemState& state, const PlantInputs& inputs, const Grid& grid) {
  const std::size_t n = grid.area_count();
  if (grid.ties.areas() != n || state.areas() != n || state.size() != SystemState::dimension(n) ||
      static_cast<std::size_t>(inputs.command.size()) != n ||
      static_cast<std::size_t>(inputs.load.size()) != n)
    throw StructuralError("state, inputs and grid dimensions disagree");
}

}  // namespace detail

inline double saturate(double command, double limit) { return std::clamp(command, -limit, limit); }

/// Right-hand side of the LFC ODE.
inline SystemState derivatives(const SystemState& state, const PlantInputs& inputs, const Grid& grid) {
  detail::check_dimensions(state, inputs, grid);
  if (!state.all_finite()) throw NumericError("non-finite entry in system state");

  const std::size_t n = grid.area_count();
  SystemState d(n);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const AreaParams& p = grid.areas[i];
    const double f = state.frequency(i);
    const double pm = state.mechanical(i);
    const double pv = state.valve(i);
    const double pc = saturate(inputs.command[static_cast<Eigen::Index>(i)], grid.command_limit);
    const double pl = inputs.load[static_cast<Eigen::Index>(i)];
    d.set_frequency(i, (pm - pl - p.damping * f - state.net_tie(i)) / p.inertia);
    d.set_mechanical(i, (pv - pm) / p.turbine_time);
    d.set_valve(i, (pc - f / p.droop - pv) / p.governor_time);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d.set_tie(i, j, two_pi * grid.ties.coefficient(i, j) * (state.frequency(i) - state.frequency(j)));
  return d;
}

/// One classical RK4 step with inputs held over the step.
inline SystemState rk4_step(const SystemState& state, const PlantInputs& inputs, const Grid& grid, double h) {
  if (!(h > 0) || !std::isfinite(h)) throw StructuralError("integration step must be > 0");
  const std::size_t n = state.areas();
  const Eigen::VectorXd& x = state.vector();
  const std::string failure = "RK4 step of size " + std::to_string(h) + " produced a non-finite state";
  try {
    const Eigen::VectorXd k1 = derivatives(state, inputs, grid).vector();
    const Eigen::VectorXd k2 = derivatives(SystemState(n, x + 0.5 * h * k1), inputs, grid).vector();
    const Eigen::VectorXd k3 = derivatives(SystemState(n, x + 0.5 * h * k2), inputs, grid).vector();
    const Eigen::VectorXd k4 = derivatives(SystemState(n, x + h * k3), inputs, grid).vector();
    SystemState next(n, x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!next.all_finite()) throw NumericError(failure);
    return next;
  } catch (const NumericError&) {
    if (!state.all_finite()) throw;
    throw NumericError(failure);
  }
}

/// dx/dt = A x + B u + E load, valid while commands stay inside the
/// saturation band.
struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;  // command inputs
  Eigen::MatrixXd E;  // load inputs
};

/// Accepts any topology, connected or not.
inline LinearModel assemble_linear_model(const Grid& grid) {
  if (grid.areas.empty() || grid.ties.areas() != grid.area_count())
    throw StructuralError("tie topology and area list disagree");
  for (const auto& a : grid.areas) a.validate();
  const std::size_t n = grid.area_count();
  const auto dim = static_cast<Eigen::Index>(SystemState::dimension(n));
  const auto m = static_cast<Eigen::Index>(n);
  LinearModel lm{Eigen::MatrixXd::Zero(dim, dim), Eigen::MatrixXd::Zero(dim, m), Eigen::MatrixXd::Zero(dim, m)};
  auto idx = [](std::size_t s) { return static_cast<Eigen::Index>(s); };

  for (std::size_t i = 0; i < n; ++i) {
    const AreaParams& p = grid.areas[i];
    const auto f = idx(SystemState::frequency_slot(i));
    const auto pm = idx(SystemState::mechanical_slot(i));
    const auto pv = idx(SystemState::valve_slot(i));
    const auto col = idx(i);
    lm.A(f, f) = -p.damping / p.inertia;
    lm.A(f, pm) = 1.0 / p.inertia;
    lm.E(f, col) = -1.0 / p.inertia;
    lm.A(pm, pv) = 1.0 / p.turbine_time;
    lm.A(pm, pm) = -1.0 / p.turbine_time;
    lm.A(pv, f) = -1.0 / (p.droop * p.governor_time);
    lm.A(pv, pv) = -1.0 / p.governor_time;
    lm.B(pv, col) = 1.0 / p.governor_time;
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto t = idx(SystemState::tie_slot(n, i, j));
      const double k = two_pi * grid.ties.coefficient(i, j);
      lm.A(t, idx(SystemState::frequency_slot(i))) = k;
      lm.A(t, idx(SystemState::frequency_slot(j))) = -k;
      // flow i->j leaves area i and enters area j
      lm.A(idx(SystemState::frequency_slot(i)), t) = -1.0 / grid.areas[i].inertia;
      lm.A(idx(SystemState::frequency_slot(j)), t) = 1.0 / grid.areas[j].inertia;
    }
  }
  return lm;
}

/// Area control error: beta_i * df_i + net tie flow of area i.
inline double ace(const SystemState& state, const Grid& grid, std::size_t area) {
  if (area >= grid.area_count() || area >= state.areas())
    throw StructuralError("area index " + std::to_string(area) + " out of range");
  return grid.areas[area].frequency_bias * state.frequency(area) + state.net_tie(area);
}

/// Per-area penalty sum_i (beta_i df_i)^2 + (net tie_i)^2, squares kept
/// separate. This is the integrand of the agent reward.
inline double separate_squares_penalty(const SystemState& state, const Grid& grid) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.area_count(); ++i) {
    const double bf = grid.areas[i].frequency_bias * state.frequency(i);
    const double tie = state.net_tie(i);
    sum += bf * bf + tie * tie;
  }
  return sum;
}

/// Classical sum_i ACE_i^2.
inline double ace_squared_penalty(const SystemState& state, const Grid& grid) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.area_count(); ++i) {
    const double e = ace(state, grid, i);
    sum += e * e;
  }
  return sum;
}

}  // namespace agc
