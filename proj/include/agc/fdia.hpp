#pragma once

// False data injection: additive offsets on the frequency sensors, tie-line
// sensors and control commands that travel over the communication network.
// The plant itself never sees these offsets except through the corrupted
// commands delivered to the governors.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "agc/error.hpp"
#include "agc/lfc_dynamics.hpp"

namespace agc {

enum class AttackKind { step, pulse, ramp };
enum class Channel { frequency_sensor, tieline_sensor, control_signal };

inline std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::step: return "step";
    case AttackKind::pulse: return "pulse";
    case AttackKind::ramp: return "ramp";
  }
  return "?";
}

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::frequency_sensor: return "frequency_sensor";
    case Channel::tieline_sensor: return "tieline_sensor";
    case Channel::control_signal: return "control_signal";
  }
  return "?";
}

struct InjectionPoint {
  Channel channel = Channel::frequency_sensor;
  std::size_t area = 0;
};

/// One attack waveform. `magnitude` is the offset for step and pulse
/// attacks and the slope (p.u./s) for ramps. Step and ramp attacks persist
/// to the end of the episode.
struct AttackSignal {
  AttackKind kind = AttackKind::step;
  double magnitude = 0.0;
  double start_time = 0.0;
  double duration = 0.0;  // pulse only
  InjectionPoint target;

  void validate() const {
    if (!(std::isfinite(start_time) && start_time >= 0))
      throw StructuralError("attack start time must be >= 0");
    if (!std::isfinite(magnitude)) throw StructuralError("attack magnitude must be finite");
    if (kind == AttackKind::pulse && !(std::isfinite(duration) && duration > 0))
      throw StructuralError("pulse attack needs a duration > 0");
  }
};

/// Offset injected by `attack` at time t.
inline double signal_value(const AttackSignal& attack, double t) {
  if (t < attack.start_time) return 0.0;
  switch (attack.kind) {
    case AttackKind::step: return attack.magnitude;
    case AttackKind::pulse: return t < attack.start_time + attack.duration ? attack.magnitude : 0.0;
    case AttackKind::ramp: return attack.magnitude * (t - attack.start_time);
  }
  return 0.0;
}

/// What the control centre receives: per-area frequency and net tie flow.
struct MeasurementFrame {
  double time = 0.0;
  Eigen::VectorXd frequency;
  Eigen::VectorXd net_tie;

  std::size_t areas() const { return static_cast<std::size_t>(frequency.size()); }

  static MeasurementFrame from_state(const SystemState& state, double t) {
    const auto n = static_cast<Eigen::Index>(state.areas());
    MeasurementFrame m{t, Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      m.frequency[i] = state.frequency(static_cast<std::size_t>(i));
      m.net_tie[i] = state.net_tie(static_cast<std::size_t>(i));
    }
    return m;
  }

  friend bool operator==(const MeasurementFrame& a, const MeasurementFrame& b) {
    return a.time == b.time && a.frequency == b.frequency && a.net_tie == b.net_tie;
  }
};

namespace detail {

inline void check_target(const AttackSignal& a, std::size_t areas) {
  if (a.target.area >= areas)
    throw StructuralError("attack targets area " + std::to_string(a.target.area + 1) + " but grid has " +
                          std::to_string(areas) + " areas");
}

}  // namespace detail

/// Adds every active sensor attack to its channel. Control-signal attacks
/// are ignored here.
inline MeasurementFrame corrupt_measurements(const MeasurementFrame& frame, const std::vector<AttackSignal>& attacks,
                                             double t) {
  MeasurementFrame out = frame;
  for (const auto& a : attacks) {
    detail::check_target(a, frame.areas());
    const auto i = static_cast<Eigen::Index>(a.target.area);
    switch (a.target.channel) {
      case Channel::frequency_sensor: out.frequency[i] += signal_value(a, t); break;
      case Channel::tieline_sensor: out.net_tie[i] += signal_value(a, t); break;
      case Channel::control_signal: break;
    }
  }
  return out;
}

/// Adds every active control-signal attack to the matching command.
inline Eigen::VectorXd corrupt_control(const Eigen::VectorXd& commands, const std::vector<AttackSignal>& attacks,
                                       double t) {
  Eigen::VectorXd out = commands;
  for (const auto& a : attacks) {
    detail::check_target(a, static_cast<std::size_t>(commands.size()));
    if (a.target.channel == Channel::control_signal)
      out[static_cast<Eigen::Index>(a.target.area)] += signal_value(a, t);
  }
  return out;
}

}  // namespace agc
