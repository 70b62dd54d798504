#include "mhe/flight_sim.hpp"

#include <gtest/gtest.h>

namespace {

using mhe::DisturbanceConfig;
using mhe::Quaternion;
using mhe::ReferencePoint;
using mhe::SensorConfig;
using mhe::SimConfig;
using mhe::TrajectoryKind;
using mhe::TrajectoryTiming;
using mhe::TrueState;
using mhe::Vec3;

TEST(Reference, StartPoints) {
  const ReferencePoint lem = mhe::reference(TrajectoryKind::Lemniscate, 0.0);
  EXPECT_NEAR((lem.p - Vec3{0.0, 0.0, 2.5}).norm(), 0.0, 1e-12);
  EXPECT_NEAR(lem.v.norm(), 0.0, 1e-12);

  const ReferencePoint cir = mhe::reference(TrajectoryKind::SlantedCircle, 0.0);
  EXPECT_NEAR((cir.p - Vec3{5.0, 0.0, 1.5}).norm(), 0.0, 1e-12);
  EXPECT_NEAR(cir.v.norm(), 0.0, 1e-12);
}

TEST(Reference, PeakSpeeds) {
  const TrajectoryTiming timing;
  double peak_lem = 0.0, peak_cir = 0.0;
  for (double t = 0.0; t <= timing.total_s(); t += 0.002) {
    peak_lem = std::max(peak_lem, mhe::reference(TrajectoryKind::Lemniscate, t, timing).v.norm());
    peak_cir =
        std::max(peak_cir, mhe::reference(TrajectoryKind::SlantedCircle, t, timing).v.norm());
  }
  EXPECT_NEAR(peak_lem, 11.3, 0.02 * 11.3);
  EXPECT_NEAR(peak_cir, 8.7, 0.02 * 8.7);
}

TEST(Reference, RampsToRestAtBothEnds) {
  const TrajectoryTiming timing;
  const double total = timing.total_s();
  EXPECT_NEAR(mhe::reference(TrajectoryKind::Lemniscate, total, timing).v.norm(), 0.0, 1e-9);
  EXPECT_NEAR(mhe::reference(TrajectoryKind::Lemniscate, total + 5.0, timing).v.norm(), 0.0,
              1e-12);
  EXPECT_THROW(mhe::reference(TrajectoryKind::Lemniscate, -0.1), std::invalid_argument);
}

TEST(Reference, DerivativesMatchFiniteDifferences) {
  const TrajectoryTiming timing;
  const double h = 1e-5;
  for (double t : {2.0, 9.0, 13.5, 20.0}) {
    for (TrajectoryKind kind : {TrajectoryKind::Lemniscate, TrajectoryKind::SlantedCircle}) {
      const ReferencePoint a = mhe::reference(kind, t - h, timing);
      const ReferencePoint b = mhe::reference(kind, t + h, timing);
      const ReferencePoint c = mhe::reference(kind, t, timing);
      EXPECT_LE((c.v - (b.p - a.p) / (2.0 * h)).norm(), 1e-5);
      EXPECT_LE((c.a - (b.v - a.v) / (2.0 * h)).norm(), 1e-5);
    }
  }
}

TEST(Controller, HoverEquilibrium) {
  TrueState x;
  x.p = {0.0, 0.0, 1.5};
  x.mass = 1.0;
  const ReferencePoint ref{{0.0, 0.0, 1.5}, Vec3::Zero(), Vec3::Zero()};
  const mhe::ControlCommand cmd = mhe::controller(x, ref, 1.0);
  EXPECT_NEAR(cmd.thrust, 9.81, 1e-6);
  EXPECT_NEAR(cmd.omega_cmd.norm(), 0.0, 1e-9);
}

TEST(Controller, PositionErrorRaisesThrust) {
  TrueState x;
  x.p = {0.0, 0.0, 1.0};
  const ReferencePoint ref{{0.0, 0.0, 1.5}, Vec3::Zero(), Vec3::Zero()};
  const mhe::ControlCommand cmd = mhe::controller(x, ref, 1.0);
  EXPECT_GT(cmd.thrust, 9.81);
}

TEST(TrueStep, ZeroDragMatchesNominalModel) {
  TrueState x;
  x.q = Quaternion::from_axis_angle({1.0, 2.0, 0.5}, 0.4);
  x.v = {2.0, -1.0, 0.5};
  x.w = {0.5, 0.3, -0.7};
  x.mass = 1.0;

  DisturbanceConfig no_drag;
  no_drag.linear.setZero();

  // match by commanding the current body rate (zero lag torque)
  const TrueState next = mhe::true_step(x, 12.0, x.w, no_drag, 0.01);

  mhe::ModelState xd = mhe::ModelState::zero(mhe::ModelKind::Dynamic);
  xd.set_attitude(x.q);
  xd.set_velocity(x.v);
  xd.set_body_rates(x.w);
  const mhe::ModelState nd =
      mhe::f_rk4(mhe::ModelKind::Dynamic, xd, {12.0}, mhe::NominalParams{}, 0.01);

  EXPECT_LE((next.p - nd.position()).norm(), 1e-14);
  EXPECT_LE((next.v - nd.velocity()).norm(), 1e-14);
  EXPECT_LE(mhe::attitude_error_deg(next.q, nd.attitude()), 1e-12);
}

TEST(TrueStep, DragOpposesMotionAndGrowsWithSpeed) {
  DisturbanceConfig dist;
  TrueState x;
  x.mass = 1.0;
  double prev_mag = 0.0;
  for (double speed = 1.0; speed <= 12.0; speed += 1.0) {
    x.v = {speed, 0.0, 0.0};
    const Vec3 sf = mhe::specific_force(x, 9.81, dist);
    EXPECT_LT(sf.x(), 0.0);
    EXPECT_GT(std::abs(sf.x()), prev_mag);
    prev_mag = std::abs(sf.x());
  }
}

TEST(SpecificForce, SteadyLevelFlightForceBalance) {
  DisturbanceConfig dist;
  dist.linear = {0.3, 0.3, 0.15};
  TrueState x;
  x.v = {5.0, 0.0, 0.0};
  x.mass = 1.0;
  const Vec3 sf = mhe::specific_force(x, 9.81, dist);
  EXPECT_NEAR(sf.x(), -0.3 * 5.0, 1e-12);
  EXPECT_NEAR(sf.z(), 9.81, 1e-12);
}

TEST(Sense, ZeroNoiseIsExact) {
  TrueState x;
  x.p = {1.0, 2.0, 3.0};
  x.v = Vec3::Zero();
  x.mass = 1.0;
  SensorConfig cfg;
  mhe::SensorRng rng(5);
  DisturbanceConfig no_drag;
  no_drag.linear.setZero();
  const mhe::MeasurementFrame m = mhe::sense(x, 9.81, no_drag, cfg, rng, 0.5);
  EXPECT_EQ((m.p_meas - x.p).norm(), 0.0);
  EXPECT_EQ(m.w_meas.norm(), 0.0);
  EXPECT_NEAR((m.a_meas - Vec3{0.0, 0.0, 9.81}).norm(), 0.0, 1e-15);
}

TEST(Sense, NoiseLevelPresets) {
  const SensorConfig l3 = mhe::sensors_for_level(3, 0);
  EXPECT_DOUBLE_EQ(l3.sigma_p, 1.0);
  EXPECT_DOUBLE_EQ(l3.sigma_w, 1.72);
  EXPECT_DOUBLE_EQ(l3.sigma_a, 0.1);
  const SensorConfig l1 = mhe::sensors_for_level(1, 0);
  EXPECT_DOUBLE_EQ(l1.sigma_p, 0.007);
  EXPECT_DOUBLE_EQ(l1.sigma_w, 0.40);
  EXPECT_DOUBLE_EQ(l1.sigma_a, 0.007);
  EXPECT_THROW(mhe::sensors_for_level(4, 0), std::invalid_argument);
}

TEST(Sense, NoiseIsZeroMean) {
  TrueState x;
  x.mass = 1.0;
  SensorConfig cfg;
  cfg.sigma_p = 1.0;
  mhe::SensorRng rng(11);
  DisturbanceConfig no_drag;
  no_drag.linear.setZero();
  const int n = 100000;
  Vec3 acc = Vec3::Zero();
  for (int k = 0; k < n; ++k) {
    acc += mhe::sense(x, 0.0, no_drag, cfg, rng, 0.0).p_meas;
  }
  const Vec3 mean = acc / n;
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  EXPECT_LE(std::abs(mean.x()), bound);
  EXPECT_LE(std::abs(mean.y()), bound);
  EXPECT_LE(std::abs(mean.z()), bound);
}

TEST(PayloadSchedule, AlternatesWithMinimumDwell) {
  const TrajectoryTiming timing{8.0, 24.0};
  const mhe::PayloadSchedule sched =
      mhe::PayloadSchedule::pick_and_place(TrajectoryKind::SlantedCircle, timing, 0.3, 6.0);
  ASSERT_GE(sched.events.size(), 2u);
  double expected = 0.3;
  double last_t = -1e9;
  for (const mhe::PayloadEvent& e : sched.events) {
    EXPECT_DOUBLE_EQ(e.delta_mass, expected);
    EXPECT_GE(e.t - last_t, 6.0);
    expected = -expected;
    last_t = e.t;
  }
}

TEST(RunFlight, RowCountMatchesRateContract) {
  SimConfig cfg;
  cfg.trajectory = TrajectoryKind::Hover;
  cfg.timing = {1.0, 1.0};
  cfg.sensors.seed = 1;
  const mhe::FlightLog log = mhe::run_flight(cfg);
  const double duration = cfg.timing.total_s();
  EXPECT_NEAR(log.size(), duration * 100.0, 1.5);
  EXPECT_TRUE(log.has_truth());
}

TEST(RunFlight, DeterministicUnderSeed) {
  SimConfig cfg;
  cfg.trajectory = TrajectoryKind::Hover;
  cfg.timing = {1.0, 0.5};
  cfg.sensors = mhe::sensors_for_level(2, 77);
  const mhe::FlightLog a = mhe::run_flight(cfg);
  const mhe::FlightLog b = mhe::run_flight(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    EXPECT_EQ((a.rows[i].p_meas - b.rows[i].p_meas).norm(), 0.0);
    EXPECT_EQ((a.rows[i].a_meas - b.rows[i].a_meas).norm(), 0.0);
    EXPECT_EQ(a.rows[i].thrust, b.rows[i].thrust);
  }
}

TEST(RunFlight, HoverIsStationaryWithoutDisturbance) {
  SimConfig cfg;
  cfg.trajectory = TrajectoryKind::Hover;
  cfg.timing = {2.0, 6.0};  // 10 s
  cfg.disturbance.linear.setZero();
  const mhe::FlightLog log = mhe::run_flight(cfg);
  const Vec3 start = log.truth.front().p;
  for (const mhe::TruthRow& r : log.truth) {
    EXPECT_LE((r.p - start).norm(), 1e-9);
  }
}

TEST(RunFlight, TracksLemniscateAtZeroNoise) {
  SimConfig cfg;
  cfg.trajectory = TrajectoryKind::Lemniscate;
  cfg.timing = {8.0, 8.0};
  const mhe::FlightLog log = mhe::run_flight(cfg);
  double se = 0.0;
  for (int i = 0; i < log.size(); ++i) {
    const ReferencePoint ref =
        mhe::reference(TrajectoryKind::Lemniscate, log.truth[i].t, cfg.timing);
    se += (log.truth[i].p - ref.p).squaredNorm();
  }
  const double rmse = std::sqrt(se / log.size());
  EXPECT_LT(rmse, 0.3);
}

TEST(RunFlight, PayloadMassTraceSteps) {
  SimConfig cfg;
  cfg.trajectory = TrajectoryKind::SlantedCircle;
  cfg.timing = {8.0, 24.0};
  cfg.payload = mhe::PayloadSchedule::pick_and_place(TrajectoryKind::SlantedCircle,
                                                     cfg.timing, 0.3, 6.0);
  const mhe::FlightLog log = mhe::run_flight(cfg);
  double min_mass = 1e9, max_mass = 0.0;
  for (const mhe::TruthRow& r : log.truth) {
    min_mass = std::min(min_mass, r.mass);
    max_mass = std::max(max_mass, r.mass);
    EXPECT_TRUE(r.mass == 1.0 || std::abs(r.mass - 1.3) < 1e-12);
  }
  EXPECT_DOUBLE_EQ(min_mass, 1.0);
  EXPECT_NEAR(max_mass, 1.3, 1e-12);
  EXPECT_DOUBLE_EQ(log.truth.front().mass, 1.0);
}

}  // namespace
