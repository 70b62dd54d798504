#pragma once

#include "mhe/core_math.hpp"

namespace mhe {

// Estimator model variants: kinematic (accelerometer is a measurement state),
// dynamic (thrust input), and the GP-corrected dynamic model.
enum class ModelKind { Kinematic, Dynamic, GpAugmented };

const char* model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);

inline const Vec3 kGravityW{0.0, 0.0, -9.81};  // m/s², world frame

struct NominalParams {
  double mass = 1.0;          // kg, rigid-body mass
  Vec3 gravity = kGravityW;   // m/s², world frame
  double payload = 0.0;       // kg, online-estimated extra mass
};

struct ControlInput {
  double thrust = 0.0;  // N, collective thrust along body z
};

// State vector layout, shared across model variants:
//   [p(0:2) q(3:6) v(7:9) ω(10:12) extra(13:15)]
// where extra is a_B for the kinematic model and the body-frame
// acceleration correction for the GP model.
inline constexpr int kPosIdx = 0;
inline constexpr int kQuatIdx = 3;
inline constexpr int kVelIdx = 7;
inline constexpr int kOmegaIdx = 10;
inline constexpr int kExtraIdx = 13;

int state_dim(ModelKind kind);   // 13 / 16 / 16
int output_dim(ModelKind kind);  // 9 / 7 / 10
int input_dim(ModelKind kind);   // 0 / 1 / 1

// Variant-tagged state vector with the quaternion block kept unit norm.
struct ModelState {
  ModelKind kind = ModelKind::Dynamic;
  Eigen::VectorXd x;

  ModelState() = default;
  ModelState(ModelKind k, Eigen::VectorXd x_);

  static ModelState zero(ModelKind kind);  // identity attitude, all else zero

  Vec3 position() const { return x.segment<3>(kPosIdx); }
  Quaternion attitude() const {
    return {x[kQuatIdx], x[kQuatIdx + 1], x[kQuatIdx + 2], x[kQuatIdx + 3]};
  }
  Vec3 velocity() const { return x.segment<3>(kVelIdx); }
  Vec3 body_rates() const { return x.segment<3>(kOmegaIdx); }
  Vec3 extra() const;  // a_B (kinematic) or B_â_e (GP); throws for Dyn13

  void set_position(const Vec3& p) { x.segment<3>(kPosIdx) = p; }
  void set_attitude(const Quaternion& q) { x.segment<4>(kQuatIdx) = q.coeffs(); }
  void set_velocity(const Vec3& v) { x.segment<3>(kVelIdx) = v; }
  void set_body_rates(const Vec3& w) { x.segment<3>(kOmegaIdx) = w; }
  void set_extra(const Vec3& e);
};

// Normalizes the quaternion block of a raw state vector in place.
void normalize_quat_block(Eigen::VectorXd& x, int offset = kQuatIdx);

/// Nominal thrust acceleration (0, 0, f/(m + m_p)) in body frame [m/s²].
Vec3 thrust_accel(const ControlInput& u, const NominalParams& params);

// Selection of the state-derivative rows that receive the body-frame
// acceleration correction. Zero correction leaves the derivative unchanged.
struct CorrectionMap {
  int velocity_row = kVelIdx;

  // Adds the rotated body-frame correction into the velocity-derivative rows.
  void apply(const Quaternion& q, const Vec3& correction, Eigen::VectorXd& deriv) const {
    deriv.segment<3>(velocity_row) += quat_rotate(q, correction);
  }
};

/// 13-state dynamic model: ṗ = v, q̇ = q⊙(0, ω/2), v̇ = q⊙a_B + g, ω̇ = 0.
Eigen::VectorXd f_dyn(const ModelState& x, const ControlInput& u, const NominalParams& params);

/// 16-state kinematic model: a_B is a measurement state with ȧ_B = 0; no input.
Eigen::VectorXd f_kin(const ModelState& x);

/// 16-state GP-corrected model: v̇ = q⊙(a_B + B_â_e) + g, d(B_â_e)/dt = 0.
Eigen::VectorXd f_gp(const ModelState& x, const ControlInput& u, const NominalParams& params,
                     const CorrectionMap& corr = {});

// Raw-vector form used by the integrator and the shooting solver. The input
// vector is empty for the kinematic model and [f_thrust] otherwise.
Eigen::VectorXd model_deriv(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const NominalParams& params);

/// One RK4 step of the chosen model; the quaternion block is renormalized.
ModelState f_rk4(ModelKind kind, const ModelState& x, const ControlInput& u,
                 const NominalParams& params, double dt);

Eigen::VectorXd f_rk4_raw(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const NominalParams& params, double dt);

// Output map h(x, u):
//   kinematic    y = (p, ω, a_B)           9-dim
//   dynamic      y = (p, ω, f_thrust)      7-dim
//   GP-augmented y = (p, ω, f_thrust, B_â_e) 10-dim
Eigen::VectorXd output_h(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

}  // namespace mhe
