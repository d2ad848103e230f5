#pragma once

// DQN training loop against randomized closed-loop episodes.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "agc/dqn_agent.hpp"
#include "agc/error.hpp"
#include "agc/harness.hpp"
#include "agc/scenario.hpp"
#include "agc/text_io.hpp"

namespace agc {

/// Draws one training episode from the distribution in `base.training`: a
/// step load of uniform magnitude in [-load_max, load_max] on a random area
/// and, with probability attack_probability, one attack of random kind,
/// channel, area, sign and size.
inline Scenario sample_training_episode(const Scenario& base, Rng& rng) {
  const TrainingSpec& t = base.training;
  Scenario s = base;
  s.loads.clear();
  s.attacks.clear();
  const std::size_t n = base.areas();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::uniform_int_distribution<std::size_t> area(0, n - 1);

  LoadEvent load;
  load.area = area(rng);
  load.kind = LoadKind::step;
  load.start_time = between(t.load_start_min, t.load_start_max);
  load.magnitude = between(-t.load_max, t.load_max);
  s.loads.push_back(load);

  if (unit(rng) < t.attack_probability) {
    AttackSignal a;
    a.kind = static_cast<AttackKind>(std::uniform_int_distribution<int>(0, 2)(rng));
    a.target.channel = static_cast<Channel>(std::uniform_int_distribution<int>(0, 2)(rng));
    a.target.area = area(rng);
    a.start_time = between(t.attack_start_min, t.attack_start_max);
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    if (a.kind == AttackKind::ramp) {
      a.magnitude = sign * between(0.0, t.ramp_slope_max);
    } else {
      a.magnitude = sign * between(t.attack_magnitude_min, t.attack_magnitude_max);
      if (a.kind == AttackKind::pulse) a.duration = between(t.pulse_duration_min, t.pulse_duration_max);
    }
    s.attacks.push_back(a);
  }
  return s;
}

struct TrainingLogRow {
  std::size_t episode = 0;
  double episode_return = 0.0;  // sum of unscaled rewards
  double epsilon = 0.0;         // at the end of the episode
  double mean_loss = 0.0;       // over the episode's train steps; 0 if none

  friend bool operator==(const TrainingLogRow&, const TrainingLogRow&) = default;
};

struct TrainingResult {
  DqnPolicy policy;
  std::vector<TrainingLogRow> log;
  std::size_t train_steps = 0;
};

/// Fresh policy for `base` with the network initialized from `rng`.
inline DqnPolicy initial_policy(const Scenario& base, const HyperParams& h, Rng& rng) {
  const std::size_t n = base.areas();
  DqnPolicy p;
  p.actions = ActionTable(n, h.command_levels());
  p.mode = h.action_mode;
  p.input_scale = h.input_scale;
  std::vector<std::size_t> sizes{p.input_size()};
  sizes.insert(sizes.end(), h.hidden.begin(), h.hidden.end());
  sizes.push_back(p.actions.size());
  p.network = QNetwork::create(sizes, rng);
  return p;
}

/// Standard DQN: per control period observe the (possibly attacked)
/// measurements, act epsilon-greedily, step the plant, store the transition,
/// and take one SGD step once the memory holds a full batch. The target
/// network is synchronized every `target_sync_period` SGD steps. Fully
/// determined by `seed`.
inline TrainingResult train(const Scenario& base, std::size_t episodes, std::uint64_t seed) {
  const HyperParams& h = base.training.hyper;
  h.validate();
  base.validate();
  Rng rng(seed);
  TrainingResult result;
  result.policy = initial_policy(base, h, rng);
  if (episodes == 0) return result;

  QNetwork& online = result.policy.network;
  QNetwork target = online;
  ReplayMemory memory(h.replay_capacity);
  const std::size_t per_episode = base.control_steps();
  const std::size_t total_steps = episodes * per_episode;
  std::size_t global_step = 0;

  for (std::size_t ep = 0; ep < episodes; ++ep) {
    const Scenario episode = sample_training_episode(base, rng);
    ClosedLoop loop(episode, false);
    Eigen::VectorXd held = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(base.areas()));
    Eigen::VectorXd s = result.policy.observation(loop.measurement(), held);
    TrainingLogRow row;
    row.episode = ep;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double epsilon = h.epsilon_start;
    try {
      while (!loop.done()) {
        epsilon = h.epsilon_at(global_step, total_steps);
        const std::size_t a = select_action(online.forward(s), epsilon, rng);
        held = apply_action(result.policy, held, a, base.grid.command_limit);
        const double r = loop.step(held);
        row.episode_return += r;
        Eigen::VectorXd next = result.policy.observation(loop.measurement(), held);
        memory.push(Transition{s, a, h.reward_scale * r, next, loop.done()});
        s = std::move(next);
        ++global_step;
        if (memory.size() >= h.batch_size) {
          loss_sum += train_step(online, target, memory.sample(h.batch_size, rng), h.learning_rate, h.gamma);
          ++loss_count;
          ++result.train_steps;
          if (result.train_steps % h.target_sync_period == 0) sync_target(online, target);
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("training episode " + std::to_string(ep) + ", control step " +
                             std::to_string(loop.period()) + ": " + e.what(),
                         loop.period());
    } catch (const InstabilityError& e) {
      throw InstabilityError("training episode " + std::to_string(ep) + ": " + e.what(), e.time());
    }
    row.epsilon = epsilon;
    row.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    result.log.push_back(row);
  }
  return result;
}

inline void write_training_log_csv(std::ostream& os, const std::vector<TrainingLogRow>& log) {
  using text::format_double;
  os << "episode,return,epsilon,loss_mean\n";
  for (const auto& r : log)
    os << r.episode << ',' << format_double(r.episode_return) << ',' << format_double(r.epsilon) << ','
       << format_double(r.mean_loss) << '\n';
}

inline void write_training_log_csv(const std::string& path, const std::vector<TrainingLogRow>& log) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_training_log_csv(os, log);
  if (!os) throw IoError("failed writing: " + path);
}

}  // namespace agc
