#pragma once

// Deep Q-network controller: a small fully connected Q-network trained with
// replay memory, a periodically synchronized target network, epsilon-greedy
// exploration and plain SGD on the squared TD error.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "agc/controller.hpp"
#include "agc/error.hpp"
#include "agc/lfc_dynamics.hpp"
#include "agc/text_io.hpp"

namespace agc {

using Rng = std::mt19937_64;

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights == b.weights && a.bias == b.bias;
  }
};

/// Parameter gradients, same shapes as the network layers.
struct NetworkGradients {
  std::vector<DenseLayer> layers;
};

/// Fully connected network: ReLU on hidden layers, affine output.
class QNetwork {
 public:
  QNetwork() = default;
  explicit QNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check_shapes(); }

  /// He-scaled normal weights, zero biases. `sizes` = {input, hidden..., output}.
  static QNetwork create(const std::vector<std::size_t>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw StructuralError("network needs at least an input and an output size");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const auto in = static_cast<Eigen::Index>(sizes[l]);
      const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
      if (in == 0 || out == 0) throw StructuralError("layer sizes must be positive");
      const double scale = std::sqrt(2.0 / static_cast<double>(in));
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
      for (Eigen::Index r = 0; r < out; ++r)
        for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = scale * normal(rng);
      layers.push_back(std::move(layer));
    }
    return QNetwork(std::move(layers));
  }

  std::size_t input_size() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weights.cols()); }
  std::size_t output_size() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weights.rows()); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& s) const {
    if (static_cast<std::size_t>(s.size()) != input_size())
      throw StructuralError("network input has " + std::to_string(s.size()) + " entries, expected " +
                            std::to_string(input_size()));
    return forward_batch(s);
  }

  /// Columns are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_size())
      throw StructuralError("network input dimension mismatch");
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].weights * a;
      z.colwise() += layers_[l].bias;
      a = (l + 1 < layers_.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  /// Mean over the batch of (target_b - Q(s_b, a_b))^2 and, when `grad` is
  /// non-null, its gradient with respect to every parameter.
  double squared_error(const Eigen::MatrixXd& inputs, const std::vector<std::size_t>& actions,
                       const Eigen::VectorXd& targets, NetworkGradients* grad) const {
    const Eigen::Index batch = inputs.cols();
    if (batch == 0 || static_cast<std::size_t>(batch) != actions.size() || targets.size() != batch)
      throw StructuralError("batch inputs, actions and targets disagree in length");
    if (static_cast<std::size_t>(inputs.rows()) != input_size())
      throw StructuralError("network input dimension mismatch");

    std::vector<Eigen::MatrixXd> pre;   // z per layer
    std::vector<Eigen::MatrixXd> post;  // activations, post[0] = inputs
    post.push_back(inputs);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].weights * post.back();
      z.colwise() += layers_[l].bias;
      pre.push_back(z);
      post.push_back(l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
    }
    const Eigen::MatrixXd& q = post.back();
    const double inv_batch = 1.0 / static_cast<double>(batch);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
    double loss = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(b)]);
      if (a >= q.rows()) throw StructuralError("action index out of range");
      const double err = q(a, b) - targets[b];
      loss += err * err;
      delta(a, b) = 2.0 * err * inv_batch;
    }
    loss *= inv_batch;
    if (grad == nullptr) return loss;

    grad->layers.resize(layers_.size());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      grad->layers[l].weights = delta * post[l].transpose();
      grad->layers[l].bias = delta.rowwise().sum();
      if (l > 0) {
        delta = layers_[l].weights.transpose() * delta;
        delta = delta.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
      }
    }
    return loss;
  }

  void apply_sgd(const NetworkGradients& grad, double learning_rate) {
    if (learning_rate == 0.0) return;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weights -= learning_rate * grad.layers[l].weights;
      layers_[l].bias -= learning_rate * grad.layers[l].bias;
    }
  }

  friend bool operator==(const QNetwork& a, const QNetwork& b) { return a.layers_ == b.layers_; }

 private:
  void check_shapes() const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].bias.size() != layers_[l].weights.rows()) throw StructuralError("bias/weight shape mismatch");
      if (l > 0 && layers_[l].weights.cols() != layers_[l - 1].weights.rows())
        throw StructuralError("consecutive layer shapes do not chain");
    }
  }

  std::vector<DenseLayer> layers_;
};

// ---------------------------------------------------------------------------
// Actions

/// How a joint action maps to commands. `absolute`: the level is the command.
/// `incremental`: the level is added to the controller's held command.
enum class ActionMode { absolute, incremental };

/// Cartesian product of per-area command levels. Area 0 is the least
/// significant digit of the joint index.
class ActionTable {
 public:
  ActionTable() = default;
  ActionTable(std::size_t areas, std::vector<double> levels) : areas_(areas), levels_(std::move(levels)) {
    if (areas_ == 0 || levels_.empty()) throw StructuralError("empty action table");
    size_ = 1;
    for (std::size_t i = 0; i < areas_; ++i) size_ *= levels_.size();
  }

  /// `count` levels uniformly spanning [-span, +span].
  static std::vector<double> uniform_levels(std::size_t count, double span) {
    if (count == 0) throw StructuralError("need at least one level");
    if (count == 1) return {0.0};
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k)
      v[k] = span * ((2.0 * static_cast<double>(k) - static_cast<double>(count - 1)) / static_cast<double>(count - 1));
    return v;
  }

  std::size_t size() const { return size_; }
  std::size_t areas() const { return areas_; }
  const std::vector<double>& levels() const { return levels_; }

  Eigen::VectorXd decode(std::size_t index) const {
    if (index >= size_) throw StructuralError("action index out of range");
    Eigen::VectorXd u(static_cast<Eigen::Index>(areas_));
    for (std::size_t i = 0; i < areas_; ++i) {
      u[static_cast<Eigen::Index>(i)] = levels_[index % levels_.size()];
      index /= levels_.size();
    }
    return u;
  }

  std::size_t encode(const std::vector<std::size_t>& level_indices) const {
    if (level_indices.size() != areas_) throw StructuralError("one level index per area required");
    std::size_t index = 0;
    for (std::size_t i = areas_; i-- > 0;) {
      if (level_indices[i] >= levels_.size()) throw StructuralError("level index out of range");
      index = index * levels_.size() + level_indices[i];
    }
    return index;
  }

 private:
  std::size_t areas_ = 0;
  std::vector<double> levels_;
  std::size_t size_ = 0;
};

/// Lowest index among the maxima.
inline std::size_t argmax(const Eigen::VectorXd& q) {
  if (q.size() == 0) throw StructuralError("empty Q-value vector");
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < q.size(); ++k)
    if (q[k] > q[best]) best = k;
  return static_cast<std::size_t>(best);
}

/// Epsilon-greedy draw: with probability epsilon a uniformly random action
/// (which may be the greedy one), otherwise the greedy action. The greedy
/// action thus has probability 1 - eps + eps/|A| and every other eps/|A|.
inline std::size_t select_action(const Eigen::VectorXd& q_values, double epsilon, Rng& rng) {
  if (q_values.size() == 0) throw StructuralError("empty action table");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw StructuralError("epsilon must lie in [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(q_values.size()) - 1);
    return pick(rng);
  }
  return argmax(q_values);
}

// ---------------------------------------------------------------------------
// Reward and temporal-difference targets

enum class RewardRule { rectangle, trapezoid };

/// r = -dt * sum_i [(beta_i df_i)^2 + (sum_j dPtie_ij)^2] at the end-of-step
/// state. The trapezoid rule averages the start and end penalties.
inline double reward(const SystemState& end, const Grid& grid, double dt) {
  if (!(dt > 0)) throw StructuralError("reward period must be > 0");
  return -dt * separate_squares_penalty(end, grid);
}

inline double reward(const SystemState& start, const SystemState& end, const Grid& grid, double dt,
                     RewardRule rule) {
  if (rule == RewardRule::rectangle) return reward(end, grid, dt);
  if (!(dt > 0)) throw StructuralError("reward period must be > 0");
  return -dt * 0.5 * (separate_squares_penalty(start, grid) + separate_squares_penalty(end, grid));
}

struct Transition {
  Eigen::VectorXd state;
  std::size_t action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool terminal = false;
};

inline double td_target(const Transition& t, const QNetwork& target_net, double gamma) {
  if (t.terminal || gamma == 0.0) return t.reward;
  return t.reward + gamma * target_net.forward(t.next_state).maxCoeff();
}

inline double td_error(const Transition& t, const QNetwork& online_net, const QNetwork& target_net, double gamma) {
  const Eigen::VectorXd q = online_net.forward(t.state);
  if (t.action >= static_cast<std::size_t>(q.size())) throw StructuralError("action index out of range");
  return td_target(t, target_net, gamma) - q[static_cast<Eigen::Index>(t.action)];
}

/// One SGD step on the mean squared TD error of `batch`. Targets come from
/// `target_net` and are held fixed. Returns the loss before the update.
inline double train_step(QNetwork& online_net, const QNetwork& target_net, const std::vector<const Transition*>& batch,
                         double learning_rate, double gamma) {
  if (batch.empty()) throw StructuralError("empty training batch");
  const auto rows = static_cast<Eigen::Index>(online_net.input_size());
  const auto size = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd states(rows, size);
  Eigen::MatrixXd next(rows, size);
  std::vector<std::size_t> actions(batch.size());
  for (Eigen::Index b = 0; b < size; ++b) {
    const Transition& t = *batch[static_cast<std::size_t>(b)];
    if (t.state.size() != rows || t.next_state.size() != rows) throw StructuralError("transition state size mismatch");
    states.col(b) = t.state;
    next.col(b) = t.next_state;
    actions[static_cast<std::size_t>(b)] = t.action;
  }
  const Eigen::MatrixXd next_q = target_net.forward_batch(next);
  Eigen::VectorXd targets(size);
  for (Eigen::Index b = 0; b < size; ++b) {
    const Transition& t = *batch[static_cast<std::size_t>(b)];
    targets[b] = t.terminal ? t.reward : t.reward + gamma * next_q.col(b).maxCoeff();
  }
  NetworkGradients grad;
  const double loss = online_net.squared_error(states, actions, targets, &grad);
  if (!std::isfinite(loss)) {
    for (Eigen::Index b = 0; b < size; ++b)
      if (!std::isfinite(targets[b]) || !states.col(b).allFinite())
        throw NumericError("non-finite TD loss at batch index " + std::to_string(b), static_cast<std::size_t>(b));
    throw NumericError("non-finite TD loss");
  }
  online_net.apply_sgd(grad, learning_rate);
  return loss;
}

inline void sync_target(const QNetwork& online_net, QNetwork& target_net) { target_net = online_net; }

// ---------------------------------------------------------------------------
// Replay memory

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest
/// transition.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw StructuralError("replay capacity must be positive");
    buffer_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
  }

  void push(Transition t) {
    if (!std::isfinite(t.reward)) throw NumericError("non-finite reward pushed to replay memory");
    if (buffer_.size() < capacity_) {
      buffer_.push_back(std::move(t));
    } else {
      buffer_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// Storage slot of the i-th oldest transition.
  const Transition& oldest(std::size_t i) const {
    if (i >= buffer_.size()) throw StructuralError("replay index out of range");
    const std::size_t start = buffer_.size() < capacity_ ? 0 : next_;
    return buffer_[(start + i) % capacity_];
  }

  /// Uniform sampling with replacement; returns storage indices.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const {
    if (buffer_.empty()) throw StructuralError("cannot sample an empty replay memory");
    std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
    std::vector<std::size_t> out(count);
    for (auto& i : out) i = pick(rng);
    return out;
  }

  std::vector<const Transition*> sample(std::size_t count, Rng& rng) const {
    std::vector<const Transition*> out;
    out.reserve(count);
    for (std::size_t i : sample_indices(count, rng)) out.push_back(&buffer_[i]);
    return out;
  }

  const Transition& at(std::size_t slot) const { return buffer_.at(slot); }

 private:
  std::size_t capacity_;
  std::vector<Transition> buffer_;
  std::size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Hyper-parameters and the trained policy

struct HyperParams {
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of total training steps
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t target_sync_period = 500;  // train steps
  std::size_t replay_capacity = 100000;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t levels = 7;
  double level_span = 0.1;
  std::vector<double> level_values;  // explicit per-area levels; overrides levels/level_span when non-empty
  ActionMode action_mode = ActionMode::absolute;
  double input_scale = 1.0;   // observations are multiplied by this before the network
  double reward_scale = 1.0;  // learning signal = reward_scale * reward; logged rewards are unscaled
  RewardRule reward_rule = RewardRule::rectangle;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw StructuralError("gamma must lie in [0, 1)");
    for (double e : {epsilon_start, epsilon_end})
      if (!(e >= 0.0 && e <= 1.0)) throw StructuralError("epsilon must lie in [0, 1]");
    if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
      throw StructuralError("epsilon decay fraction must lie in [0, 1]");
    if (!(learning_rate > 0)) throw StructuralError("learning rate must be > 0");
    if (batch_size == 0) throw StructuralError("batch size must be positive");
    if (target_sync_period == 0) throw StructuralError("target sync period must be positive");
    if (replay_capacity == 0) throw StructuralError("replay capacity must be positive");
    if (levels == 0) throw StructuralError("need at least one command level");
    if (!(level_span >= 0)) throw StructuralError("level span must be >= 0");
    for (double v : level_values)
      if (!std::isfinite(v)) throw StructuralError("command levels must be finite");
    if (!(input_scale > 0) || !(reward_scale > 0)) throw StructuralError("scales must be > 0");
  }

  std::vector<double> command_levels() const {
    return level_values.empty() ? ActionTable::uniform_levels(levels, level_span) : level_values;
  }

  /// Linear decay from start to end over the first `decay_fraction` of
  /// `total_steps`, then constant.
  double epsilon_at(std::size_t step, std::size_t total_steps) const {
    const double horizon = epsilon_decay_fraction * static_cast<double>(total_steps);
    if (horizon <= 0.0) return epsilon_end;
    const double frac = static_cast<double>(step) / horizon;
    if (frac >= 1.0) return epsilon_end;
    return epsilon_start + (epsilon_end - epsilon_start) * frac;
  }
};

/// Everything needed to act: network, action table, command mode and the
/// observation scaling.
struct DqnPolicy {
  QNetwork network;
  ActionTable actions;
  ActionMode mode = ActionMode::absolute;
  double input_scale = 1.0;

  /// Network input width: measured frequencies and net tie flows, plus the
  /// held command per area in incremental mode.
  std::size_t input_size() const {
    return (mode == ActionMode::incremental ? 3 : 2) * actions.areas();
  }

  /// Network input [df_0..df_{N-1}, tie_0..tie_{N-1}(, held_0..held_{N-1})], scaled.
  Eigen::VectorXd observation(const MeasurementFrame& frame, const Eigen::VectorXd& held) const {
    const auto n = static_cast<Eigen::Index>(frame.areas());
    if (static_cast<std::size_t>(n) != actions.areas() || held.size() != n)
      throw StructuralError("observation: area count does not match the policy");
    Eigen::VectorXd s(static_cast<Eigen::Index>(input_size()));
    s.head(n) = frame.frequency * input_scale;
    s.segment(n, n) = frame.net_tie * input_scale;
    if (mode == ActionMode::incremental) s.tail(n) = held * input_scale;
    return s;
  }

  friend bool operator==(const DqnPolicy& a, const DqnPolicy& b) {
    return a.network == b.network && a.actions.levels() == b.actions.levels() &&
           a.actions.areas() == b.actions.areas() && a.mode == b.mode && a.input_scale == b.input_scale;
  }
};

/// Applies a joint action to the held command.
inline Eigen::VectorXd apply_action(const DqnPolicy& policy, const Eigen::VectorXd& held, std::size_t action,
                                    double command_limit) {
  const Eigen::VectorXd level = policy.actions.decode(action);
  if (policy.mode == ActionMode::absolute) return level;
  Eigen::VectorXd next = held + level;
  for (Eigen::Index i = 0; i < next.size(); ++i) next[i] = saturate(next[i], command_limit);
  return next;
}

/// Greedy controller around a trained policy.
class DqnController final : public Controller {
 public:
  DqnController(DqnPolicy policy, double command_limit)
      : policy_(std::move(policy)), command_limit_(command_limit) {
    if (policy_.network.input_size() != policy_.input_size() ||
        policy_.network.output_size() != policy_.actions.size())
      throw StructuralError("network shape does not match the action table");
    reset();
  }

  Eigen::VectorXd observe(const MeasurementFrame& frame) override {
    if (frame.areas() != policy_.actions.areas()) throw StructuralError("measurement frame size does not match policy");
    const std::size_t a = argmax(policy_.network.forward(policy_.observation(frame, held_)));
    held_ = apply_action(policy_, held_, a, command_limit_);
    return held_;
  }
  void reset() override { held_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(policy_.actions.areas())); }
  std::string name() const override { return "dqn"; }
  const DqnPolicy& policy() const { return policy_; }

 private:
  DqnPolicy policy_;
  double command_limit_;
  Eigen::VectorXd held_;
};

// ---------------------------------------------------------------------------
// Checkpoint
//
//   agc-qnetwork 1
//   areas <N>
//   action_mode absolute|incremental
//   input_scale <x>
//   levels <L> <l_0> ... <l_{L-1}>
//   layers <K>
//   dense <out> <in>
//   <out lines of <in> weights, row-major>
//   <one line of <out> biases>
//   ... repeated K times
//
// Numbers are written in shortest round-trip decimal form.

inline void write_checkpoint(std::ostream& os, const DqnPolicy& p) {
  using text::format_double;
  os << "agc-qnetwork 1\n";
  os << "areas " << p.actions.areas() << '\n';
  os << "action_mode " << (p.mode == ActionMode::absolute ? "absolute" : "incremental") << '\n';
  os << "input_scale " << format_double(p.input_scale) << '\n';
  os << "levels " << p.actions.levels().size();
  for (double l : p.actions.levels()) os << ' ' << format_double(l);
  os << '\n';
  os << "layers " << p.network.layers().size() << '\n';
  for (const auto& layer : p.network.layers()) {
    os << "dense " << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        os << (c ? " " : "") << format_double(layer.weights(r, c));
      os << '\n';
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) os << (r ? " " : "") << format_double(layer.bias[r]);
    os << '\n';
  }
}

inline DqnPolicy read_checkpoint(std::istream& is) {
  auto fail = [](const std::string& what) -> DqnPolicy { throw IoError("malformed checkpoint: " + what); };
  auto number = [&](std::string_view what) {
    std::string tok;
    if (!(is >> tok)) throw IoError("malformed checkpoint: missing " + std::string(what));
    const auto v = text::parse_double(tok);
    if (!v) throw IoError("malformed checkpoint: bad number '" + tok + "' for " + std::string(what));
    return *v;
  };
  auto keyword = [&](std::string_view expected) {
    std::string tok;
    if (!(is >> tok) || tok != expected) throw IoError("malformed checkpoint: expected '" + std::string(expected) + "'");
  };
  auto count = [&](std::string_view what) {
    const double v = number(what);
    if (v < 0 || v != std::floor(v) || v > 1e7) throw IoError("malformed checkpoint: bad count for " + std::string(what));
    return static_cast<std::size_t>(v);
  };

  keyword("agc-qnetwork");
  if (count("version") != 1) return fail("unsupported version");
  keyword("areas");
  const std::size_t areas = count("areas");
  keyword("action_mode");
  std::string mode;
  is >> mode;
  DqnPolicy p;
  if (mode == "absolute")
    p.mode = ActionMode::absolute;
  else if (mode == "incremental")
    p.mode = ActionMode::incremental;
  else
    return fail("unknown action mode '" + mode + "'");
  keyword("input_scale");
  p.input_scale = number("input_scale");
  keyword("levels");
  std::vector<double> levels(count("levels"));
  for (auto& l : levels) l = number("level");
  p.actions = ActionTable(areas, std::move(levels));
  keyword("layers");
  std::vector<DenseLayer> layers(count("layers"));
  for (auto& layer : layers) {
    keyword("dense");
    const auto out = static_cast<Eigen::Index>(count("rows"));
    const auto in = static_cast<Eigen::Index>(count("cols"));
    layer.weights.resize(out, in);
    layer.bias.resize(out);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = number("weight");
    for (Eigen::Index r = 0; r < out; ++r) layer.bias[r] = number("bias");
  }
  p.network = QNetwork(std::move(layers));
  if (p.network.input_size() != p.input_size() || p.network.output_size() != p.actions.size())
    return fail("network shape does not match areas/levels");
  return p;
}

inline void save_checkpoint(const std::string& path, const DqnPolicy& p) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  write_checkpoint(os, p);
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

inline DqnPolicy load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  try {
    return read_checkpoint(is);
  } catch (const IoError& e) {
    throw IoError(std::string(e.what()) + " (" + path + ")");
  }
}

}  // namespace agc
