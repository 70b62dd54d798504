#include "mhe/vehicle_models.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using mhe::ControlInput;
using mhe::ModelKind;
using mhe::ModelState;
using mhe::NominalParams;
using mhe::Quaternion;
using mhe::Vec3;

ModelState hover_state(ModelKind kind) {
  ModelState x = ModelState::zero(kind);
  if (kind == ModelKind::Kinematic) x.set_extra({0.0, 0.0, 9.81});
  return x;
}

TEST(ThrustAccel, HoverAndZero) {
  const Vec3 a = mhe::thrust_accel({9.81}, NominalParams{});
  EXPECT_NEAR((a - Vec3{0.0, 0.0, 9.81}).norm(), 0.0, 1e-15);
  EXPECT_EQ(mhe::thrust_accel({0.0}, NominalParams{}).norm(), 0.0);
}

TEST(ThrustAccel, PayloadTerm) {
  NominalParams p;
  p.mass = 1.0;
  p.payload = 0.3;
  const Vec3 a = mhe::thrust_accel({13.0}, p);
  EXPECT_NEAR(a.z(), 10.0, 1e-12);
}

TEST(ThrustAccel, RejectsNonPositiveTotalMass) {
  NominalParams p;
  p.mass = 0.2;
  p.payload = -0.2;
  EXPECT_THROW(mhe::thrust_accel({1.0}, p), std::invalid_argument);
}

TEST(FDyn, HoverIsEquilibrium) {
  const ModelState x = hover_state(ModelKind::Dynamic);
  const Eigen::VectorXd dx = mhe::f_dyn(x, {9.81}, NominalParams{});
  EXPECT_NEAR(dx.lpNorm<Eigen::Infinity>(), 0.0, 1e-15);
}

TEST(FDyn, DoubleHoverThrustAccelerates) {
  const ModelState x = hover_state(ModelKind::Dynamic);
  const Eigen::VectorXd dx = mhe::f_dyn(x, {2.0 * 9.81}, NominalParams{});
  EXPECT_NEAR(dx[mhe::kVelIdx + 2], 9.81, 1e-12);
}

TEST(FDyn, BodyRateDerivativeIsZero) {
  ModelState x = hover_state(ModelKind::Dynamic);
  x.set_body_rates({1.0, -2.0, 3.0});
  x.set_velocity({4.0, 5.0, 6.0});
  const Eigen::VectorXd dx = mhe::f_dyn(x, {17.0}, NominalParams{});
  EXPECT_EQ(dx.segment<3>(mhe::kOmegaIdx).norm(), 0.0);
}

TEST(FDyn, RejectsWrongVariant) {
  const ModelState x = hover_state(ModelKind::Kinematic);
  EXPECT_THROW(mhe::f_dyn(x, {1.0}, NominalParams{}), std::invalid_argument);
}

TEST(FKin, GravityCancellation) {
  const ModelState x = hover_state(ModelKind::Kinematic);
  const Eigen::VectorXd dx = mhe::f_kin(x);
  EXPECT_NEAR(dx.lpNorm<Eigen::Infinity>(), 0.0, 1e-15);
}

TEST(FKin, ZeroRowsForRatesAndAccel) {
  ModelState x = hover_state(ModelKind::Kinematic);
  x.set_extra({1.0, 2.0, 3.0});
  x.set_body_rates({0.3, 0.2, 0.1});
  const Eigen::VectorXd dx = mhe::f_kin(x);
  EXPECT_EQ(dx.segment<3>(mhe::kOmegaIdx).norm(), 0.0);
  EXPECT_EQ(dx.segment<3>(mhe::kExtraIdx).norm(), 0.0);
}

TEST(FKin, MatchesFDynWhenAccelStateEqualsThrust) {
  std::mt19937 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double thrust = 5.0 + 10.0 * std::abs(n(gen));
    ModelState xd = ModelState::zero(ModelKind::Dynamic);
    xd.set_attitude(Quaternion{n(gen), n(gen), n(gen), n(gen)}.normalized());
    xd.set_velocity({n(gen), n(gen), n(gen)});
    xd.set_body_rates({n(gen), n(gen), n(gen)});

    ModelState xk = ModelState::zero(ModelKind::Kinematic);
    xk.x.head<13>() = xd.x;
    xk.set_extra(mhe::thrust_accel({thrust}, NominalParams{}));

    const Eigen::VectorXd dd = mhe::f_dyn(xd, {thrust}, NominalParams{});
    const Eigen::VectorXd dk = mhe::f_kin(xk);
    EXPECT_NEAR((dk.head<13>() - dd).lpNorm<Eigen::Infinity>(), 0.0, 1e-12);
  }
}

TEST(FGp, ZeroCorrectionReducesToFDyn) {
  std::mt19937 gen(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ModelState xd = ModelState::zero(ModelKind::Dynamic);
    xd.set_attitude(Quaternion{n(gen), n(gen), n(gen), n(gen)}.normalized());
    xd.set_velocity({n(gen), n(gen), n(gen)});
    xd.set_body_rates({n(gen), n(gen), n(gen)});
    const double thrust = 3.0 + std::abs(n(gen));

    ModelState xg = ModelState::zero(ModelKind::GpAugmented);
    xg.x.head<13>() = xd.x;

    const Eigen::VectorXd dg = mhe::f_gp(xg, {thrust}, NominalParams{}, {});
    const Eigen::VectorXd dd = mhe::f_dyn(xd, {thrust}, NominalParams{});
    EXPECT_LE((dg.head<13>() - dd).lpNorm<Eigen::Infinity>(), 1e-15);
    EXPECT_EQ(dg.segment<3>(mhe::kExtraIdx).norm(), 0.0);
  }
}

TEST(FGp, CorrectionEntersVelocityRows) {
  ModelState x = ModelState::zero(ModelKind::GpAugmented);
  x.set_extra({0.0, 0.0, 0.5});
  const Eigen::VectorXd dx = mhe::f_gp(x, {9.81}, NominalParams{}, {});
  EXPECT_NEAR(dx[mhe::kVelIdx + 2], 0.5, 1e-12);
  EXPECT_EQ(dx.segment<3>(mhe::kExtraIdx).norm(), 0.0);
}

TEST(CorrectionMap, ZeroCorrectionLeavesDerivativeUnchanged) {
  Eigen::VectorXd deriv = Eigen::VectorXd::Ones(16);
  const Eigen::VectorXd before = deriv;
  mhe::CorrectionMap{}.apply(Quaternion::identity(), Vec3::Zero(), deriv);
  EXPECT_EQ((deriv - before).norm(), 0.0);
}

TEST(FRk4, HoverIsFixedPoint) {
  for (ModelKind kind :
       {ModelKind::Kinematic, ModelKind::Dynamic, ModelKind::GpAugmented}) {
    const ModelState x = hover_state(kind);
    const ControlInput u{kind == ModelKind::Kinematic ? 0.0 : 9.81};
    const ModelState next = mhe::f_rk4(kind, x, u, NominalParams{}, 0.01);
    EXPECT_LE((next.x - x.x).lpNorm<Eigen::Infinity>(), 1e-12) << mhe::model_name(kind);
  }
}

TEST(FRk4, FreeFallVelocityChange) {
  const ModelState x = ModelState::zero(ModelKind::Dynamic);
  const ModelState next = mhe::f_rk4(ModelKind::Dynamic, x, {0.0}, NominalParams{}, 0.01);
  EXPECT_NEAR(next.x[mhe::kVelIdx + 2], -0.0981, 1e-12);
}

TEST(FRk4, QuaternionStaysUnit) {
  ModelState x = ModelState::zero(ModelKind::Dynamic);
  x.set_body_rates({3.0, -2.0, 1.0});
  ModelState cur = x;
  for (int k = 0; k < 100; ++k) {
    cur = mhe::f_rk4(ModelKind::Dynamic, cur, {12.0}, NominalParams{}, 0.01);
    EXPECT_NEAR(cur.attitude().norm(), 1.0, 1e-9);
  }
}

TEST(FRk4, EnergySanityFreeFallAnyAttitude) {
  std::mt19937 gen(13);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ModelState x = ModelState::zero(ModelKind::Dynamic);
    x.set_attitude(Quaternion{n(gen), n(gen), n(gen), n(gen)}.normalized());
    const Eigen::VectorXd dx = mhe::f_dyn(x, {0.0}, NominalParams{});
    EXPECT_EQ(dx[mhe::kVelIdx + 0], 0.0);
    EXPECT_EQ(dx[mhe::kVelIdx + 1], 0.0);
    EXPECT_EQ(dx[mhe::kVelIdx + 2], -9.81);
  }
}

TEST(OutputH, Dimensions) {
  const Eigen::VectorXd u1 = Eigen::VectorXd::Constant(1, 7.5);
  EXPECT_EQ(mhe::output_h(ModelKind::Kinematic, hover_state(ModelKind::Kinematic).x,
                          Eigen::VectorXd())
                .size(),
            9);
  EXPECT_EQ(mhe::output_h(ModelKind::Dynamic, hover_state(ModelKind::Dynamic).x, u1).size(),
            7);
  EXPECT_EQ(
      mhe::output_h(ModelKind::GpAugmented, hover_state(ModelKind::GpAugmented).x, u1).size(),
      10);
}

TEST(OutputH, PositionLeadsOutput) {
  ModelState x = hover_state(ModelKind::Dynamic);
  x.set_position({1.0, 2.0, 3.0});
  const Eigen::VectorXd y = mhe::output_h(ModelKind::Dynamic, x.x,
                                          Eigen::VectorXd::Constant(1, 4.0));
  EXPECT_EQ(y[0], 1.0);
  EXPECT_EQ(y[1], 2.0);
  EXPECT_EQ(y[2], 3.0);
  EXPECT_EQ(y[6], 4.0);  // thrust channel mirrors the input
}

TEST(OutputH, GpTailSelectsCorrectionState) {
  ModelState x = ModelState::zero(ModelKind::GpAugmented);
  x.set_extra({0.1, -0.2, 0.3});
  const Eigen::VectorXd y = mhe::output_h(ModelKind::GpAugmented, x.x,
                                          Eigen::VectorXd::Constant(1, 4.0));
  EXPECT_EQ(y[7], 0.1);
  EXPECT_EQ(y[8], -0.2);
  EXPECT_EQ(y[9], 0.3);
}

TEST(ModelState, RejectsDimensionMismatch) {
  EXPECT_THROW(ModelState(ModelKind::Dynamic, Eigen::VectorXd::Zero(16)),
               std::invalid_argument);
}

TEST(ModelState, RejectsNonUnitQuaternionBlock) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(13);
  x[mhe::kQuatIdx] = 1.1;
  EXPECT_THROW(ModelState(ModelKind::Dynamic, x), std::invalid_argument);
}

}  // namespace
