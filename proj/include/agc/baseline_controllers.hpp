#pragma once

// Conventional AGC baselines: PID on the area control error, discrete LQR and
// unconstrained receding-horizon MPC.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "agc/controller.hpp"
#include "agc/error.hpp"
#include "agc/lfc_dynamics.hpp"
#include "agc/linear_algebra.hpp"

namespace agc {

// ---------------------------------------------------------------------------
// PID

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double filter = 10.0;  // derivative filter coefficient N_f, 1/s

  void validate() const {
    if (!(std::isfinite(kp) && std::isfinite(ki) && std::isfinite(kd))) throw StructuralError("PID gains must be finite");
    if (ki < 0) throw StructuralError("Ki must be >= 0");
    if (!(filter > 0)) throw StructuralError("derivative filter coefficient must be > 0");
  }
};

struct PidState {
  double integral = 0.0;
  double previous_error = 0.0;
  double derivative = 0.0;
  bool primed = false;
};

/// One PID update on an ACE sample. The integral uses the trapezoid rule and
/// the first sample is treated as constant over the preceding period. The
/// derivative is a backward-Euler first-order filtered difference.
/// Returns u = -(Kp e + Ki int(e) + Kd de/dt).
inline double pid_step(const PidGains& g, double error, double h, PidState& s) {
  if (!(h > 0)) throw StructuralError("PID sample time must be > 0");
  const double previous = s.primed ? s.previous_error : error;
  s.integral += 0.5 * h * (previous + error);
  s.derivative = (s.derivative + g.filter * (error - previous)) / (1.0 + g.filter * h);
  s.previous_error = error;
  s.primed = true;
  return -(g.kp * error + g.ki * s.integral + g.kd * s.derivative);
}

class PidController final : public Controller {
 public:
  PidController(Grid grid, std::vector<PidGains> gains, double period)
      : grid_(std::move(grid)), gains_(std::move(gains)), period_(period), state_(grid_.area_count()) {
    if (gains_.size() == 1 && grid_.area_count() > 1) gains_.assign(grid_.area_count(), gains_.front());
    if (gains_.size() != grid_.area_count()) throw StructuralError("one set of PID gains per area required");
    for (const auto& g : gains_) g.validate();
    if (!(period_ > 0)) throw StructuralError("control period must be > 0");
  }

  Eigen::VectorXd observe(const MeasurementFrame& frame) override {
    const std::size_t n = grid_.area_count();
    if (frame.areas() != n) throw StructuralError("measurement frame size does not match grid");
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double e = grid_.areas[i].frequency_bias * frame.frequency[k] + frame.net_tie[k];
      u[k] = pid_step(gains_[i], e, period_, state_[i]);
    }
    return u;
  }

  void reset() override { state_.assign(grid_.area_count(), PidState{}); }
  std::string name() const override { return "pid"; }
  const std::vector<PidGains>& gains() const { return gains_; }

 private:
  Grid grid_;
  std::vector<PidGains> gains_;
  double period_;
  std::vector<PidState> state_;
};

// ---------------------------------------------------------------------------
// Model-based baselines

struct LqrWeights {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  double sample_time = 0.1;

  /// beta_i^2 on each frequency state, 1 on each tie state, 0 on turbine and
  /// governor states; R = 0.1 I.
  static LqrWeights defaults(const Grid& grid, double sample_time) {
    const std::size_t n = grid.area_count();
    const auto dim = static_cast<Eigen::Index>(SystemState::dimension(n));
    LqrWeights w{Eigen::MatrixXd::Zero(dim, dim), 0.1 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                                                  static_cast<Eigen::Index>(n)),
                 sample_time};
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = static_cast<Eigen::Index>(SystemState::frequency_slot(i));
      w.Q(f, f) = grid.areas[i].frequency_bias * grid.areas[i].frequency_bias;
    }
    for (auto t = static_cast<Eigen::Index>(3 * n); t < dim; ++t) w.Q(t, t) = 1.0;
    return w;
  }
};

/// Unconstrained finite-horizon problem
///   min sum_{k<N} x_k'Q x_k + u_k'R u_k + x_N'P x_N,  x_{k+1} = Ad x_k + Bd u_k
/// in batch (condensed) form. The Hessian factorization is reused across
/// calls; only the linear term depends on the current state.
class MpcProblem {
 public:
  MpcProblem(const Eigen::MatrixXd& ad, const Eigen::MatrixXd& bd, const Eigen::MatrixXd& q,
             const Eigen::MatrixXd& r, const Eigen::MatrixXd& terminal, std::size_t horizon)
      : inputs_(bd.cols()) {
    if (horizon < 1) throw StructuralError("MPC horizon must be >= 1");
    const Eigen::Index n = ad.rows();
    const Eigen::Index m = bd.cols();
    const auto nh = static_cast<Eigen::Index>(horizon);
    if (ad.cols() != n || bd.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m ||
        terminal.rows() != n || terminal.cols() != n)
      throw StructuralError("MPC operand dimensions disagree");

    // Predicted states x_1..x_N = Sx x_0 + Su U.
    Eigen::MatrixXd sx(n * nh, n);
    Eigen::MatrixXd su = Eigen::MatrixXd::Zero(n * nh, m * nh);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    std::vector<Eigen::MatrixXd> powers;  // Ad^k, k = 0..N-1
    for (Eigen::Index k = 0; k < nh; ++k) {
      powers.push_back(power);
      power = ad * power;
      sx.block(k * n, 0, n, n) = power;
    }
    for (Eigen::Index k = 0; k < nh; ++k)
      for (Eigen::Index j = 0; j <= k; ++j) su.block(k * n, j * m, n, m) = powers[static_cast<std::size_t>(k - j)] * bd;

    Eigen::MatrixXd qbar = Eigen::MatrixXd::Zero(n * nh, n * nh);
    for (Eigen::Index k = 0; k + 1 < nh; ++k) qbar.block(k * n, k * n, n, n) = q;
    qbar.block((nh - 1) * n, (nh - 1) * n, n, n) = terminal;
    Eigen::MatrixXd rbar = Eigen::MatrixXd::Zero(m * nh, m * nh);
    for (Eigen::Index k = 0; k < nh; ++k) rbar.block(k * m, k * m, m, m) = r;

    const Eigen::MatrixXd hessian = su.transpose() * qbar * su + rbar;
    linear_ = su.transpose() * qbar * sx;
    ldlt_.compute(hessian);
    if (ldlt_.info() != Eigen::Success) throw NumericError("MPC normal matrix is singular");
  }

  /// First move of the optimal input sequence.
  Eigen::VectorXd first_move(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd sequence = ldlt_.solve(-(linear_ * x));
    return sequence.head(inputs_);
  }

 private:
  Eigen::Index inputs_;
  Eigen::MatrixXd linear_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

inline Eigen::VectorXd mpc_step(const Eigen::MatrixXd& ad, const Eigen::MatrixXd& bd, const Eigen::MatrixXd& q,
                                const Eigen::MatrixXd& r, const Eigen::MatrixXd& terminal, std::size_t horizon,
                                const Eigen::VectorXd& x) {
  return MpcProblem(ad, bd, q, r, terminal, horizon).first_move(x);
}

/// Rebuilds a full state estimate from a measurement frame. Frequencies come
/// from the frame; per-pair tie flows are the minimum-norm solution of the
/// measured net flows; turbine and governor states come from an internal
/// open-loop copy of each area's governor-turbine chain driven by the issued
/// commands and the measured frequency.
class StateReconstructor {
 public:
  StateReconstructor(const Grid& grid, double period) : grid_(grid), period_(period) {
    const std::size_t n = grid_.area_count();
    for (std::size_t i = 0; i < n; ++i) {
      const AreaParams& p = grid_.areas[i];
      Eigen::Matrix2d a;
      a << -1.0 / p.turbine_time, 1.0 / p.turbine_time, 0.0, -1.0 / p.governor_time;
      Eigen::Vector2d b(0.0, 1.0 / p.governor_time);
      chains_.push_back(zoh_discretize(a, b, period_));
    }
    // net = C * pair flows over connected pairs
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (grid_.ties.coefficient(i, j) > 0) pairs.emplace_back(i, j);
    pairs_ = pairs;
    incidence_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      incidence_(static_cast<Eigen::Index>(pairs[p].first), static_cast<Eigen::Index>(p)) = 1.0;
      incidence_(static_cast<Eigen::Index>(pairs[p].second), static_cast<Eigen::Index>(p)) = -1.0;
    }
    if (!pairs.empty()) pinv_ = incidence_.completeOrthogonalDecomposition().pseudoInverse();
    reset();
  }

  void reset() {
    const auto n = static_cast<Eigen::Index>(grid_.area_count());
    chain_state_.assign(grid_.area_count(), Eigen::Vector2d::Zero());
    last_command_ = Eigen::VectorXd::Zero(n);
    last_frequency_ = Eigen::VectorXd::Zero(n);
    started_ = false;
  }

  /// Advances the internal chains to the frame time and returns the state
  /// estimate.
  SystemState estimate(const MeasurementFrame& frame) {
    const std::size_t n = grid_.area_count();
    if (frame.areas() != n) throw StructuralError("measurement frame size does not match grid");
    if (started_) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double drive =
            saturate(last_command_[k], grid_.command_limit) - last_frequency_[k] / grid_.areas[i].droop;
        chain_state_[i] = chains_[i].Ad * chain_state_[i] + chains_[i].Bd * drive;
      }
    }
    SystemState x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x.set_frequency(i, frame.frequency[static_cast<Eigen::Index>(i)]);
      x.set_mechanical(i, chain_state_[i][0]);
      x.set_valve(i, chain_state_[i][1]);
    }
    if (!pairs_.empty()) {
      const Eigen::VectorXd flows = pinv_ * frame.net_tie;
      for (std::size_t p = 0; p < pairs_.size(); ++p)
        x.set_tie(pairs_[p].first, pairs_[p].second, flows[static_cast<Eigen::Index>(p)]);
    }
    last_frequency_ = frame.frequency;
    return x;
  }

  void record_command(const Eigen::VectorXd& u) {
    last_command_ = u;
    started_ = true;
  }

 private:
  Grid grid_;
  double period_;
  std::vector<DiscreteModel> chains_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  Eigen::MatrixXd incidence_;
  Eigen::MatrixXd pinv_;
  std::vector<Eigen::Vector2d> chain_state_;
  Eigen::VectorXd last_command_;
  Eigen::VectorXd last_frequency_;
  bool started_ = false;
};

/// Discrete LQR u = -K x_hat on the zero-order-hold model sampled at the
/// control period.
class LqrController final : public Controller {
 public:
  LqrController(const Grid& grid, const LqrWeights& weights) : observer_(grid, weights.sample_time) {
    const LinearModel lm = assemble_linear_model(grid);
    const DiscreteModel dm = zoh_discretize(lm.A, lm.B, weights.sample_time);
    solution_ = solve_dare(dm.Ad, dm.Bd, weights.Q, weights.R);
    closed_loop_ = dm.Ad - dm.Bd * solution_.K;
  }

  Eigen::VectorXd observe(const MeasurementFrame& frame) override {
    const SystemState x = observer_.estimate(frame);
    Eigen::VectorXd u = -(solution_.K * x.vector());
    observer_.record_command(u);
    return u;
  }
  void reset() override { observer_.reset(); }
  std::string name() const override { return "lqr"; }

  const RiccatiSolution& riccati() const { return solution_; }
  const Eigen::MatrixXd& closed_loop() const { return closed_loop_; }

 private:
  StateReconstructor observer_;
  RiccatiSolution solution_;
  Eigen::MatrixXd closed_loop_;
};

/// Receding-horizon MPC; terminal cost from the DARE.
class MpcController final : public Controller {
 public:
  MpcController(const Grid& grid, const LqrWeights& weights, std::size_t horizon)
      : observer_(grid, weights.sample_time), problem_(build(grid, weights, horizon)) {}

  Eigen::VectorXd observe(const MeasurementFrame& frame) override {
    const SystemState x = observer_.estimate(frame);
    Eigen::VectorXd u = problem_.first_move(x.vector());
    observer_.record_command(u);
    return u;
  }
  void reset() override { observer_.reset(); }
  std::string name() const override { return "mpc"; }

 private:
  static MpcProblem build(const Grid& grid, const LqrWeights& w, std::size_t horizon) {
    const LinearModel lm = assemble_linear_model(grid);
    const DiscreteModel dm = zoh_discretize(lm.A, lm.B, w.sample_time);
    const RiccatiSolution dare = solve_dare(dm.Ad, dm.Bd, w.Q, w.R);
    return MpcProblem(dm.Ad, dm.Bd, w.Q, w.R, dare.P, horizon);
  }

  StateReconstructor observer_;
  MpcProblem problem_;
};

}  // namespace agc
