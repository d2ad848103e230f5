#include <gtest/gtest.h>

#include <cmath>

#include "agc/baseline_controllers.hpp"
#include "agc/harness.hpp"
#include "agc/scenario.hpp"
#include "agc/tuning.hpp"

namespace agc {
namespace {

TEST(PidStep, ZeroGainsGiveZero) {
  PidState s;
  for (double e : {0.3, -0.2, 1.0}) EXPECT_EQ(pid_step(PidGains{0, 0, 0, 10}, e, 0.1, s), 0.0);
}

TEST(PidStep, ProportionalOnly) {
  PidState s;
  EXPECT_NEAR(pid_step(PidGains{0.5, 0, 0, 10}, 0.1, 0.1, s), -0.05, 1e-15);
}

TEST(PidStep, TrapezoidIntegral) {
  PidState s;
  const PidGains g{0, 1, 0, 10};
  EXPECT_NEAR(pid_step(g, 0.1, 0.01, s), -0.001, 1e-15);
  EXPECT_NEAR(s.integral, 0.001, 1e-15);
  EXPECT_NEAR(pid_step(g, 0.1, 0.01, s), -0.002, 1e-15);
  EXPECT_NEAR(s.integral, 0.002, 1e-15);
  // trapezoid between the last two samples
  pid_step(g, 0.3, 0.01, s);
  EXPECT_NEAR(s.integral, 0.002 + 0.01 * 0.2, 1e-15);
}

TEST(PidStep, FilteredDerivativeTracksARamp) {
  PidState s;
  const PidGains g{0, 0, 1, 10};
  double u = 0;
  for (int k = 0; k < 200; ++k) u = pid_step(g, 0.5 * k * 0.1, 0.1, s);
  EXPECT_NEAR(u, -0.5, 1e-9);
  PidState c;
  for (int k = 0; k < 5; ++k) EXPECT_EQ(pid_step(g, 0.2, 0.1, c), 0.0);
}

TEST(PidStep, RejectsBadSampleTime) {
  PidState s;
  EXPECT_THROW(pid_step(PidGains{}, 0.1, 0.0, s), StructuralError);
}

TEST(PidGains, Validation) {
  EXPECT_THROW((PidGains{0.1, -0.1, 0, 10}).validate(), StructuralError);
  EXPECT_THROW((PidGains{0.1, 0.1, 0, 0}).validate(), StructuralError);
  EXPECT_NO_THROW((PidGains{-0.1, 0.0, -1, 1}).validate());
}

TEST(PidController, ActsOnAreaControlError) {
  const Grid g = Grid::two_area_benchmark();
  PidController pid(g, {PidGains{0.5, 0, 0, 10}}, 0.1);
  MeasurementFrame f{0.0, Eigen::Vector2d(0.1, -0.2), Eigen::Vector2d(0.05, -0.05)};
  const Eigen::VectorXd u = pid.observe(f);
  EXPECT_NEAR(u[0], -0.5 * (0.425 * 0.1 + 0.05), 1e-15);
  EXPECT_NEAR(u[1], -0.5 * (0.425 * -0.2 - 0.05), 1e-15);
  EXPECT_THROW(PidController(g, {PidGains{}, PidGains{}, PidGains{}}, 0.1), StructuralError);
  EXPECT_THROW(pid.observe(MeasurementFrame{0, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()}), StructuralError);
}

TEST(PidController, ResetRestoresInitialBehaviour) {
  const Grid g = Grid::two_area_benchmark();
  PidController pid(g, {PidGains{0.3, 0.7, 0.1, 10}}, 0.1);
  MeasurementFrame f{0.0, Eigen::Vector2d(0.01, -0.02), Eigen::Vector2d(0.005, -0.005)};
  const Eigen::VectorXd first = pid.observe(f);
  pid.observe(f);
  pid.reset();
  EXPECT_EQ(pid.observe(f), first);
}

TEST(PidController, ZeroGainsReproduceOpenLoop) {
  Scenario sc;
  sc.horizon = 20;
  sc.loads.push_back(LoadEvent{0, LoadKind::step, 2.0, 0.01});
  sc.attacks.push_back(AttackSignal{AttackKind::step, 0.01, 5, 0, {Channel::frequency_sensor, 1}});
  PidController pid(sc.grid, {PidGains{0, 0, 0, 10}}, sc.control_period);
  ZeroController zero(2);
  const Trajectory a = run_episode(sc, pid);
  const Trajectory b = run_episode(sc, zero);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) EXPECT_EQ(a.samples[k].state, b.samples[k].state);
}

TEST(StateReconstructor, TracksPlantWithFrozenRotor) {
  Grid g = Grid::two_area_benchmark();
  for (auto& a : g.areas) a.inertia = 1e15;
  StateReconstructor obs(g, 0.1);
  SystemState x(2);
  x.set_tie(0, 1, 0.03);
  const Eigen::Vector2d u(0.02, -0.01);
  for (int k = 0; k < 30; ++k) {
    const SystemState est = obs.estimate(MeasurementFrame::from_state(x, 0.1 * k));
    EXPECT_NEAR(est.tie(0, 1), x.tie(0, 1), 1e-15);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(est.mechanical(i), x.mechanical(i), 1e-7);
      EXPECT_NEAR(est.valve(i), x.valve(i), 1e-7);
    }
    obs.record_command(u);
    for (int j = 0; j < 10; ++j) x = rk4_step(x, PlantInputs{u, Eigen::Vector2d::Zero()}, g, 0.01);
  }
}

TEST(LqrController, ZeroMeasurementsGiveZeroCommand) {
  const Grid g = Grid::two_area_benchmark();
  LqrController lqr(g, LqrWeights::defaults(g, 0.1));
  MpcController mpc(g, LqrWeights::defaults(g, 0.1), 20);
  const MeasurementFrame f{0.0, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  EXPECT_TRUE(lqr.observe(f).isZero(0.0));
  EXPECT_TRUE(mpc.observe(f).isZero(0.0));
}

TEST(LqrController, MpcControllerProducesTheSameCommands) {
  Scenario sc;
  sc.horizon = 15;
  sc.loads.push_back(LoadEvent{1, LoadKind::step, 1.0, 0.01});
  const LqrWeights w = LqrWeights::defaults(sc.grid, sc.control_period);
  LqrController lqr(sc.grid, w);
  MpcController mpc(sc.grid, w, 7);
  const Trajectory a = run_episode(sc, lqr);
  const Trajectory b = run_episode(sc, mpc);
  for (std::size_t k = 0; k < a.samples.size(); ++k)
    EXPECT_LT((a.samples[k].command - b.samples[k].command).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LqrWeights, DefaultsMirrorRewardStructure) {
  const Grid g = Grid::two_area_benchmark();
  const LqrWeights w = LqrWeights::defaults(g, 0.1);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(7);
  expected << 0.425 * 0.425, 0, 0, 0.425 * 0.425, 0, 0, 1;
  EXPECT_TRUE(w.Q.isApprox(Eigen::MatrixXd(expected.asDiagonal()), 1e-15));
  EXPECT_TRUE(w.R.isApprox(0.1 * Eigen::MatrixXd::Identity(2, 2), 1e-15));
  EXPECT_EQ(w.sample_time, 0.1);
}

Scenario tuning_base() {
  Scenario sc;
  sc.loads.push_back(LoadEvent{0, LoadKind::step, 1.0, 0.01});
  return sc;
}

TEST(TunePid, TunedGainsRegulateTheStepLoad) {
  const Scenario sc = tuning_base();
  const PidTuningResult r = tune_pid(sc);
  PidController pid(sc.grid, {r.gains}, sc.control_period);
  const Trajectory t = run_episode(sc, pid);
  const auto& s = t.samples[static_cast<std::size_t>(std::llround(40.0 / sc.plant_step))];
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LT(std::abs(s.state.frequency(i)), 1e-3);
  EXPECT_EQ(r.candidates, 13u * 13u);
}

TEST(TunePid, SingleCandidateGridReturnsIt) {
  PidTuningGrid grid;
  grid.kp_min = grid.kp_max = 0.2;
  grid.ki_min = grid.ki_max = 0.5;
  grid.points = 1;
  const PidTuningResult r = tune_pid(tuning_base(), grid);
  EXPECT_EQ(r.gains.kp, 0.2);
  EXPECT_EQ(r.gains.ki, 0.5);
  EXPECT_EQ(r.candidates, 1u);
}

TEST(TunePid, RefinedGridNeverIncreasesCost) {
  PidTuningGrid coarse;
  coarse.points = 5;
  const PidTuningGrid fine = coarse.refined();
  const auto a = PidTuningGrid::axis(coarse.kp_min, coarse.kp_max, coarse.points);
  const auto b = PidTuningGrid::axis(fine.kp_min, fine.kp_max, fine.points);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k], b[2 * k]);
  EXPECT_LE(tune_pid(tuning_base(), fine).cost, tune_pid(tuning_base(), coarse).cost);
}

TEST(TunePid, AllUnstableCandidatesRaiseTuningError) {
  PidTuningGrid grid;
  grid.kp_min = grid.kp_max = 500;
  grid.ki_min = grid.ki_max = 500;
  grid.points = 1;
  EXPECT_THROW(tune_pid(tuning_base(), grid), TuningError);
}

TEST(TunePid, IgnoresAttacksAndAddsADefaultLoad) {
  Scenario sc;
  sc.attacks.push_back(AttackSignal{AttackKind::step, 0.01, 5, 0, {Channel::frequency_sensor, 1}});
  const Scenario t = tuning_episode(sc);
  EXPECT_TRUE(t.attacks.empty());
  ASSERT_EQ(t.loads.size(), 1u);
  EXPECT_EQ(t.loads[0].magnitude, 0.01);
  EXPECT_EQ(t.loads[0].area, 0u);
}

TEST(TunePid, SensorAttackLeavesSteadyFrequencyOffset) {
  Scenario sc = tuning_base();
  sc.loads[0].start_time = 5.0;
  sc.attacks.push_back(AttackSignal{AttackKind::step, 0.01, 20, 0, {Channel::frequency_sensor, 1}});
  PidController pid(sc.grid, {tune_pid(sc).gains}, sc.control_period);
  const Trajectory t = run_episode(sc, pid);
  for (std::size_t k = static_cast<std::size_t>(std::llround(40.0 / sc.plant_step)); k < t.samples.size(); ++k)
    EXPECT_GT(std::abs(t.samples[k].state.frequency(1)), 1e-3);
}

}  // namespace
}  // namespace agc
