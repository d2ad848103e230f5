#pragma once

// Scenario description and its text format.
//
// The format is line oriented: `key = value` pairs, `#` comments, and
// bracketed section headers. Top-level keys come before the first section.
// Sections [area], [tie], [load] and [attack] may repeat; [controller] and
// [training] appear at most once. Area numbers in the file are 1-based.
// Unknown keys, duplicate keys and malformed values are errors that name the
// line. See README.md for the full key list and defaults.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "agc/baseline_controllers.hpp"
#include "agc/dqn_agent.hpp"
#include "agc/error.hpp"
#include "agc/fdia.hpp"
#include "agc/lfc_dynamics.hpp"
#include "agc/text_io.hpp"

namespace agc {

enum class LoadKind { step, ramp };

/// Load disturbance. `magnitude` is p.u. for steps and p.u./s for ramps.
struct LoadEvent {
  std::size_t area = 0;
  LoadKind kind = LoadKind::step;
  double start_time = 0.0;
  double magnitude = 0.0;
};

inline double load_value(const LoadEvent& e, double t) {
  if (t < e.start_time) return 0.0;
  return e.kind == LoadKind::step ? e.magnitude : e.magnitude * (t - e.start_time);
}

enum class ControllerType { zero, pid, lqr, mpc, dqn };

inline std::string_view to_string(ControllerType t) {
  switch (t) {
    case ControllerType::zero: return "zero";
    case ControllerType::pid: return "pid";
    case ControllerType::lqr: return "lqr";
    case ControllerType::mpc: return "mpc";
    case ControllerType::dqn: return "dqn";
  }
  return "?";
}

inline std::optional<ControllerType> controller_type_from(std::string_view s) {
  if (s == "zero") return ControllerType::zero;
  if (s == "pid") return ControllerType::pid;
  if (s == "lqr") return ControllerType::lqr;
  if (s == "mpc") return ControllerType::mpc;
  if (s == "dqn") return ControllerType::dqn;
  return std::nullopt;
}

struct ControllerSpec {
  ControllerType type = ControllerType::zero;
  std::optional<std::vector<PidGains>> pid;  // absent: tune on the attack-free scenario
  std::optional<double> q_frequency_scale;   // multiplies the default beta^2 frequency weights
  std::optional<double> q_tie;
  std::optional<double> r_input;
  std::size_t mpc_horizon = 20;
  std::string checkpoint;
};

/// Episode distribution used by `train`.
struct TrainingSpec {
  std::size_t episodes = 300;
  std::uint64_t seed = 1;
  HyperParams hyper;
  double load_max = 0.02;
  double load_start_min = 1.0;
  double load_start_max = 5.0;
  double attack_probability = 0.5;
  double attack_start_min = 10.0;
  double attack_start_max = 30.0;
  double attack_magnitude_min = 0.005;
  double attack_magnitude_max = 0.02;
  double ramp_slope_max = 0.002;
  double pulse_duration_min = 1.0;
  double pulse_duration_max = 5.0;
};

struct Scenario {
  std::string name;
  Grid grid = Grid::two_area_benchmark();
  std::vector<LoadEvent> loads;
  std::vector<AttackSignal> attacks;
  double horizon = 60.0;
  double plant_step = 0.01;
  double control_period = 0.1;
  std::uint64_t seed = 1;
  double settling_band = 1e-3;
  double steady_window = 5.0;  // seconds averaged for steady-state metrics
  RewardRule reward_rule = RewardRule::rectangle;
  ControllerSpec controller;
  TrainingSpec training;

  std::size_t areas() const { return grid.area_count(); }

  /// Plant steps per control period.
  std::size_t control_ratio() const {
    return static_cast<std::size_t>(std::llround(control_period / plant_step));
  }
  std::size_t control_steps() const {
    return static_cast<std::size_t>(std::llround(horizon / control_period));
  }

  void validate() const {
    grid.validate();
    if (!(std::isfinite(horizon) && horizon > 0)) throw StructuralError("horizon must be > 0");
    if (!(std::isfinite(plant_step) && plant_step > 0)) throw StructuralError("plant_step must be > 0");
    if (!(std::isfinite(control_period) && control_period > 0)) throw StructuralError("control_period must be > 0");
    const double ratio = control_period / plant_step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1)
      throw StructuralError("control_period must be an integer multiple of plant_step");
    const double periods = horizon / control_period;
    if (std::abs(periods - std::round(periods)) > 1e-9 * periods)
      throw StructuralError("horizon must be an integer multiple of control_period");
    if (!(settling_band > 0)) throw StructuralError("settling_band must be > 0");
    if (!(steady_window > 0)) throw StructuralError("steady_window must be > 0");
    for (const auto& l : loads) {
      if (l.area >= areas()) throw StructuralError("load event names area " + std::to_string(l.area + 1) + " of " + std::to_string(areas()));
      if (!(std::isfinite(l.start_time) && l.start_time >= 0) || !std::isfinite(l.magnitude))
        throw StructuralError("load event needs finite start >= 0 and magnitude");
    }
    for (const auto& a : attacks) {
      a.validate();
      if (a.target.area >= areas())
        throw StructuralError("attack names area " + std::to_string(a.target.area + 1) + " of " + std::to_string(areas()));
    }
    if (controller.pid)
      for (const auto& g : *controller.pid) g.validate();
    training.hyper.validate();
  }

  Scenario without_attacks() const {
    Scenario s = *this;
    s.attacks.clear();
    return s;
  }
};

namespace detail {

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

struct Section {
  std::string name;
  std::size_t line = 0;
  std::map<std::string, Entry> entries;

  const Entry* find(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::optional<double> number(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    const auto v = text::parse_double(e->value);
    if (!v || !std::isfinite(*v)) throw ParseError("'" + key + "' expects a finite number, got '" + e->value + "'", e->line);
    return v;
  }

  double number_or(const std::string& key, double fallback) { return number(key).value_or(fallback); }

  std::optional<std::size_t> count(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    const auto v = text::parse_double(e->value);
    if (!v || *v < 0 || *v != std::floor(*v) || *v > 1e15)
      throw ParseError("'" + key + "' expects a non-negative integer, got '" + e->value + "'", e->line);
    return static_cast<std::size_t>(*v);
  }

  std::vector<double> numbers(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return {};
    std::vector<double> out;
    std::istringstream ss(e->value);
    std::string tok;
    while (ss >> tok) {
      const auto v = text::parse_double(tok);
      if (!v || !std::isfinite(*v)) throw ParseError("'" + key + "' expects numbers, got '" + tok + "'", e->line);
      out.push_back(*v);
    }
    if (out.empty()) throw ParseError("'" + key + "' is empty", e->line);
    return out;
  }

  std::size_t area(const std::string& key, bool required = true) {
    const Entry* e = find(key);
    if (!e) {
      if (required) throw ParseError("[" + name + "] requires '" + key + "'", line);
      return 0;
    }
    const auto v = text::parse_double(e->value);
    if (!v || *v < 1 || *v != std::floor(*v)) throw ParseError("'" + key + "' expects an area number >= 1", e->line);
    return static_cast<std::size_t>(*v) - 1;
  }

  std::optional<std::string> word(const std::string& key) {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    return e->value;
  }

  [[noreturn]] void bad_value(const std::string& key, const std::string& expected) {
    const Entry& e = entries.at(key);
    throw ParseError("'" + key + "' must be " + expected + ", got '" + e.value + "'", e.line);
  }

  void reject_unknown(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, e] : entries)
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw ParseError("unknown key '" + key + "' in [" + name + "]", e.line);
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries)
      if (!e.used)
        throw ParseError("unknown key '" + key + "'" + (name.empty() ? std::string() : " in [" + name + "]"), e.line);
  }
};

inline std::vector<double> per_area(Section& s, const std::string& key, std::size_t areas, double fallback) {
  std::vector<double> v = s.numbers(key);
  if (v.empty()) return std::vector<double>(areas, fallback);
  if (v.size() == 1) return std::vector<double>(areas, v.front());
  if (v.size() != areas) {
    const Entry& e = s.entries.at(key);
    throw ParseError("'" + key + "' needs 1 or " + std::to_string(areas) + " values", e.line);
  }
  return v;
}

}  // namespace detail

inline Scenario parse_scenario(std::string_view source) {
  using detail::Section;
  std::vector<Section> sections(1);  // [0] is the top level
  std::istringstream in{std::string(source)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      const std::string name(text::trim(line.substr(1, line.size() - 2)));
      static const std::vector<std::string> known{"area", "tie", "load", "attack", "controller", "training"};
      if (std::find(known.begin(), known.end(), name) == known.end())
        throw ParseError("unknown section [" + name + "]", line_no);
      if (name == "controller" || name == "training")
        for (const auto& s : sections)
          if (s.name == name) throw ParseError("section [" + name + "] may appear only once", line_no);
      sections.push_back(Section{name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("missing key before '='", line_no);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no);
    auto& entries = sections.back().entries;
    if (entries.count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
    entries.emplace(key, detail::Entry{value, line_no, false});
  }

  Scenario sc;
  Section& top = sections.front();
  const auto version = top.count("format_version");
  if (version && *version != 1) throw ParseError("unsupported format_version", top.entries.at("format_version").line);
  if (auto n = top.word("name")) sc.name = *n;
  sc.horizon = top.number_or("horizon", sc.horizon);
  sc.plant_step = top.number_or("plant_step", sc.plant_step);
  sc.control_period = top.number_or("control_period", sc.control_period);
  if (auto s = top.count("seed")) sc.seed = *s;
  sc.settling_band = top.number_or("settling_band", sc.settling_band);
  sc.steady_window = top.number_or("steady_window", sc.steady_window);
  sc.grid.command_limit = top.number_or("command_limit", sc.grid.command_limit);
  if (auto r = top.word("reward_rule")) {
    if (*r == "rectangle")
      sc.reward_rule = RewardRule::rectangle;
    else if (*r == "trapezoid")
      sc.reward_rule = RewardRule::trapezoid;
    else
      top.bad_value("reward_rule", "rectangle or trapezoid");
  }
  std::optional<ControllerType> shorthand;
  if (auto c = top.word("controller")) {
    shorthand = controller_type_from(*c);
    if (!shorthand) top.bad_value("controller", "one of zero, pid, lqr, mpc, dqn");
  }
  top.reject_unused();

  // Grid.
  std::vector<AreaParams> areas;
  for (auto& s : sections) {
    if (s.name != "area") continue;
    AreaParams p;
    p.inertia = s.number_or("inertia", p.inertia);
    p.damping = s.number_or("damping", p.damping);
    p.droop = s.number_or("droop", p.droop);
    p.governor_time = s.number_or("governor_time", p.governor_time);
    p.turbine_time = s.number_or("turbine_time", p.turbine_time);
    p.frequency_bias = s.number_or("frequency_bias", p.frequency_bias);
    s.reject_unused();
    try {
      p.validate();
    } catch (const StructuralError& e) {
      throw ParseError(std::string("[area] ") + e.what(), s.line);
    }
    areas.push_back(p);
  }
  bool ties_given = false;
  for (const auto& s : sections) ties_given = ties_given || s.name == "tie";
  if (!areas.empty()) {
    sc.grid.areas = areas;
    sc.grid.ties = TieTopology(areas.size());
  } else if (ties_given) {
    sc.grid.ties = TieTopology(sc.grid.areas.size());
  }
  for (auto& s : sections) {
    if (s.name != "tie") continue;
    s.reject_unknown({"areas", "coefficient"});
    const auto* pair = s.find("areas");
    if (!pair) throw ParseError("[tie] requires 'areas'", s.line);
    std::istringstream ss(pair->value);
    std::string a, b, extra;
    ss >> a >> b;
    const auto ia = text::parse_double(a);
    const auto ib = text::parse_double(b);
    if (!ia || !ib || (ss >> extra) || *ia < 1 || *ib < 1 || *ia != std::floor(*ia) || *ib != std::floor(*ib))
      throw ParseError("'areas' expects two area numbers", pair->line);
    const auto coeff = s.number("coefficient");
    if (!coeff) throw ParseError("[tie] requires 'coefficient'", s.line);
    s.reject_unused();
    try {
      sc.grid.ties.set_coefficient(static_cast<std::size_t>(*ia) - 1, static_cast<std::size_t>(*ib) - 1, *coeff);
    } catch (const StructuralError& e) {
      throw ParseError(std::string("[tie] ") + e.what(), s.line);
    }
  }
  const std::size_t n = sc.grid.area_count();
  if (!sc.grid.ties.connected()) throw ParseError("tie-line graph is not connected", 0);

  // Disturbances and attacks.
  for (auto& s : sections) {
    if (s.name == "load") {
      s.reject_unknown({"area", "kind", "start", "magnitude"});
      LoadEvent e;
      e.area = s.area("area");
      if (auto k = s.word("kind")) {
        if (*k == "step")
          e.kind = LoadKind::step;
        else if (*k == "ramp")
          e.kind = LoadKind::ramp;
        else
          s.bad_value("kind", "step or ramp");
      }
      e.start_time = s.number_or("start", 0.0);
      const auto mag = s.number("magnitude");
      if (!mag) throw ParseError("[load] requires 'magnitude'", s.line);
      e.magnitude = *mag;
      s.reject_unused();
      if (e.area >= n) throw ParseError("[load] area " + std::to_string(e.area + 1) + " does not exist", s.line);
      if (e.start_time < 0) throw ParseError("[load] start must be >= 0", s.line);
      sc.loads.push_back(e);
    } else if (s.name == "attack") {
      s.reject_unknown({"kind", "channel", "area", "start", "magnitude", "slope", "duration"});
      AttackSignal a;
      if (auto k = s.word("kind")) {
        if (*k == "step")
          a.kind = AttackKind::step;
        else if (*k == "pulse")
          a.kind = AttackKind::pulse;
        else if (*k == "ramp")
          a.kind = AttackKind::ramp;
        else
          s.bad_value("kind", "step, pulse or ramp");
      } else {
        throw ParseError("[attack] requires 'kind'", s.line);
      }
      if (auto c = s.word("channel")) {
        if (*c == "frequency_sensor")
          a.target.channel = Channel::frequency_sensor;
        else if (*c == "tieline_sensor")
          a.target.channel = Channel::tieline_sensor;
        else if (*c == "control_signal")
          a.target.channel = Channel::control_signal;
        else
          s.bad_value("channel", "frequency_sensor, tieline_sensor or control_signal");
      } else {
        throw ParseError("[attack] requires 'channel'", s.line);
      }
      a.target.area = s.area("area");
      a.start_time = s.number_or("start", 0.0);
      const auto mag = s.number("magnitude");
      const auto slope = s.number("slope");
      if (a.kind == AttackKind::ramp) {
        if (mag) throw ParseError("ramp attacks take 'slope', not 'magnitude'", s.entries.at("magnitude").line);
        if (!slope) throw ParseError("[attack] ramp requires 'slope'", s.line);
        a.magnitude = *slope;
      } else {
        if (slope) throw ParseError("'slope' applies to ramp attacks only", s.entries.at("slope").line);
        if (!mag) throw ParseError("[attack] requires 'magnitude'", s.line);
        a.magnitude = *mag;
      }
      const auto duration = s.number("duration");
      if (a.kind == AttackKind::pulse) {
        if (!duration) throw ParseError("[attack] pulse requires 'duration'", s.line);
        a.duration = *duration;
      } else if (duration) {
        throw ParseError("'duration' applies to pulse attacks only", s.entries.at("duration").line);
      }
      s.reject_unused();
      if (a.target.area >= n) throw ParseError("[attack] area " + std::to_string(a.target.area + 1) + " does not exist", s.line);
      try {
        a.validate();
      } catch (const StructuralError& e) {
        throw ParseError(std::string("[attack] ") + e.what(), s.line);
      }
      sc.attacks.push_back(a);
    }
  }

  // Controller.
  if (shorthand) sc.controller.type = *shorthand;
  for (auto& s : sections) {
    if (s.name != "controller") continue;
    if (auto t = s.word("type")) {
      const auto type = controller_type_from(*t);
      if (!type) s.bad_value("type", "one of zero, pid, lqr, mpc, dqn");
      if (shorthand && *shorthand != *type)
        throw ParseError("[controller] type conflicts with top-level 'controller'", s.entries.at("type").line);
      sc.controller.type = *type;
    }
    const bool any_gain = s.entries.count("kp") || s.entries.count("ki") || s.entries.count("kd");
    const auto kp = detail::per_area(s, "kp", n, 0.0);
    const auto ki = detail::per_area(s, "ki", n, 0.0);
    const auto kd = detail::per_area(s, "kd", n, 0.0);
    const auto filter = detail::per_area(s, "filter", n, 10.0);
    if (any_gain) {
      std::vector<PidGains> gains(n);
      for (std::size_t i = 0; i < n; ++i) gains[i] = {kp[i], ki[i], kd[i], filter[i]};
      for (const auto& g : gains) {
        try {
          g.validate();
        } catch (const StructuralError& e) {
          throw ParseError(std::string("[controller] ") + e.what(), s.line);
        }
      }
      sc.controller.pid = gains;
    }
    sc.controller.q_frequency_scale = s.number("q_frequency_scale");
    sc.controller.q_tie = s.number("q_tie");
    sc.controller.r_input = s.number("r_input");
    if (auto h = s.count("horizon")) {
      if (*h < 1) throw ParseError("MPC horizon must be >= 1", s.entries.at("horizon").line);
      sc.controller.mpc_horizon = *h;
    }
    if (auto c = s.word("checkpoint")) sc.controller.checkpoint = *c;
    s.reject_unused();
  }

  // Training distribution.
  for (auto& s : sections) {
    if (s.name != "training") continue;
    TrainingSpec& t = sc.training;
    HyperParams& h = t.hyper;
    if (auto v = s.count("episodes")) t.episodes = *v;
    if (auto v = s.count("seed")) t.seed = *v;
    h.gamma = s.number_or("gamma", h.gamma);
    h.epsilon_start = s.number_or("epsilon_start", h.epsilon_start);
    h.epsilon_end = s.number_or("epsilon_end", h.epsilon_end);
    h.epsilon_decay_fraction = s.number_or("epsilon_decay_fraction", h.epsilon_decay_fraction);
    h.learning_rate = s.number_or("learning_rate", h.learning_rate);
    if (auto v = s.count("batch_size")) h.batch_size = *v;
    if (auto v = s.count("target_sync_period")) h.target_sync_period = *v;
    if (auto v = s.count("replay_capacity")) h.replay_capacity = *v;
    if (s.entries.count("hidden")) {
      h.hidden.clear();
      for (double w : s.numbers("hidden")) {
        if (w < 1 || w != std::floor(w)) throw ParseError("'hidden' expects positive integers", s.entries.at("hidden").line);
        h.hidden.push_back(static_cast<std::size_t>(w));
      }
    }
    if (auto v = s.count("levels")) h.levels = *v;
    h.level_span = s.number_or("level_span", h.level_span);
    if (s.entries.count("level_values")) h.level_values = s.numbers("level_values");
    if (auto m = s.word("action_mode")) {
      if (*m == "absolute")
        h.action_mode = ActionMode::absolute;
      else if (*m == "incremental")
        h.action_mode = ActionMode::incremental;
      else
        s.bad_value("action_mode", "absolute or incremental");
    }
    h.input_scale = s.number_or("input_scale", h.input_scale);
    h.reward_scale = s.number_or("reward_scale", h.reward_scale);
    t.load_max = s.number_or("load_max", t.load_max);
    t.load_start_min = s.number_or("load_start_min", t.load_start_min);
    t.load_start_max = s.number_or("load_start_max", t.load_start_max);
    t.attack_probability = s.number_or("attack_probability", t.attack_probability);
    t.attack_start_min = s.number_or("attack_start_min", t.attack_start_min);
    t.attack_start_max = s.number_or("attack_start_max", t.attack_start_max);
    t.attack_magnitude_min = s.number_or("attack_magnitude_min", t.attack_magnitude_min);
    t.attack_magnitude_max = s.number_or("attack_magnitude_max", t.attack_magnitude_max);
    t.ramp_slope_max = s.number_or("ramp_slope_max", t.ramp_slope_max);
    t.pulse_duration_min = s.number_or("pulse_duration_min", t.pulse_duration_min);
    t.pulse_duration_max = s.number_or("pulse_duration_max", t.pulse_duration_max);
    s.reject_unused();
    try {
      h.validate();
    } catch (const StructuralError& e) {
      throw ParseError(std::string("[training] ") + e.what(), s.line);
    }
    if (!(t.attack_probability >= 0 && t.attack_probability <= 1))
      throw ParseError("[training] attack_probability must lie in [0, 1]", s.line);
    if (t.load_start_min > t.load_start_max || t.attack_start_min > t.attack_start_max ||
        t.attack_magnitude_min > t.attack_magnitude_max || t.pulse_duration_min > t.pulse_duration_max ||
        t.pulse_duration_min <= 0 || t.load_start_min < 0 || t.attack_start_min < 0)
      throw ParseError("[training] inconsistent distribution ranges", s.line);
  }

  try {
    sc.validate();
  } catch (const StructuralError& e) {
    throw ParseError(e.what(), 0);
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  Scenario sc = parse_scenario(ss.str());
  if (sc.name.empty()) {
    const auto slash = path.find_last_of('/');
    sc.name = slash == std::string::npos ? path : path.substr(slash + 1);
  }
  return sc;
}

/// `[controller]` block holding PID gains, in scenario syntax.
inline std::string format_pid_section(const std::vector<PidGains>& gains) {
  auto join = [&](auto field) {
    std::string out;
    for (std::size_t i = 0; i < gains.size(); ++i) out += (i ? " " : "") + text::format_double(field(gains[i]));
    return out;
  };
  std::string s = "[controller]\ntype = pid\n";
  s += "kp = " + join([](const PidGains& g) { return g.kp; }) + "\n";
  s += "ki = " + join([](const PidGains& g) { return g.ki; }) + "\n";
  s += "kd = " + join([](const PidGains& g) { return g.kd; }) + "\n";
  s += "filter = " + join([](const PidGains& g) { return g.filter; }) + "\n";
  return s;
}

}  // namespace agc
