#include "mhe/vehicle_models.hpp"

namespace mhe {

const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Kinematic:
      return "k-mhe";
    case ModelKind::Dynamic:
      return "d-mhe";
    case ModelKind::GpAugmented:
      return "gp-mhe";
  }
  return "?";
}

ModelKind model_from_name(const std::string& name) {
  if (name == "k" || name == "k-mhe" || name == "kinematic") return ModelKind::Kinematic;
  if (name == "d" || name == "d-mhe" || name == "dynamic") return ModelKind::Dynamic;
  if (name == "gp" || name == "gp-mhe") return ModelKind::GpAugmented;
  throw std::invalid_argument("unknown estimator model '" + name + "' (expected k, d or gp)");
}

int state_dim(ModelKind kind) { return kind == ModelKind::Dynamic ? 13 : 16; }

int output_dim(ModelKind kind) {
  switch (kind) {
    case ModelKind::Kinematic:
      return 9;
    case ModelKind::Dynamic:
      return 7;
    case ModelKind::GpAugmented:
      return 10;
  }
  return 0;
}

int input_dim(ModelKind kind) { return kind == ModelKind::Kinematic ? 0 : 1; }

ModelState::ModelState(ModelKind k, Eigen::VectorXd x_) : kind(k), x(std::move(x_)) {
  if (x.size() != state_dim(kind)) {
    throw std::invalid_argument("ModelState: dimension does not match model kind");
  }
  const double qn = x.segment<4>(kQuatIdx).norm();
  if (std::abs(qn - 1.0) > 1e-6) {
    throw std::invalid_argument("ModelState: quaternion block is not unit norm");
  }
}

ModelState ModelState::zero(ModelKind kind) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(state_dim(kind));
  x[kQuatIdx] = 1.0;
  return {kind, std::move(x)};
}

Vec3 ModelState::extra() const {
  if (kind == ModelKind::Dynamic) {
    throw std::logic_error("ModelState: 13-state model has no extra block");
  }
  return x.segment<3>(kExtraIdx);
}

void ModelState::set_extra(const Vec3& e) {
  if (kind == ModelKind::Dynamic) {
    throw std::logic_error("ModelState: 13-state model has no extra block");
  }
  x.segment<3>(kExtraIdx) = e;
}

void normalize_quat_block(Eigen::VectorXd& x, int offset) {
  const double n = x.segment<4>(offset).norm();
  if (n < 1e-300 || !std::isfinite(n)) {
    throw NumericalError("state quaternion block degenerated");
  }
  x.segment<4>(offset) /= n;
}

Vec3 thrust_accel(const ControlInput& u, const NominalParams& params) {
  const double total = params.mass + params.payload;
  if (!(total > 0.0)) {
    throw std::invalid_argument("thrust_accel: total mass must be positive");
  }
  return {0.0, 0.0, u.thrust / total};
}

namespace {

Quaternion quat_at(const Eigen::VectorXd& x) {
  return {x[kQuatIdx], x[kQuatIdx + 1], x[kQuatIdx + 2], x[kQuatIdx + 3]};
}

// Shared rigid-body rows: ṗ = v, q̇ = q⊙(0, ω/2), v̇ = q⊙a_body + g, ω̇ = 0.
// quat_rotate is bypassed here: the derivative is evaluated at RK4 stage
// points where the quaternion block is intermediate and not unit norm.
void rigid_rows(const Eigen::VectorXd& x, const Vec3& a_body, const Vec3& g,
                Eigen::VectorXd& dx) {
  const Quaternion q = quat_at(x);
  dx.segment<3>(kPosIdx) = x.segment<3>(kVelIdx);
  dx.segment<4>(kQuatIdx) = quat_deriv(q, x.segment<3>(kOmegaIdx)).coeffs();
  const Quaternion qa = quat_mul(quat_mul(q, {0.0, a_body.x(), a_body.y(), a_body.z()}),
                                 q.conjugate());
  dx.segment<3>(kVelIdx) = Vec3{qa.x, qa.y, qa.z} + g;
  dx.segment<3>(kOmegaIdx).setZero();
}

}  // namespace

Eigen::VectorXd f_dyn(const ModelState& x, const ControlInput& u, const NominalParams& params) {
  if (x.kind != ModelKind::Dynamic) {
    throw std::invalid_argument("f_dyn: expected 13-state dynamic variant");
  }
  Eigen::VectorXd dx(13);
  rigid_rows(x.x, thrust_accel(u, params), params.gravity, dx);
  return dx;
}

Eigen::VectorXd f_kin(const ModelState& x) {
  if (x.kind != ModelKind::Kinematic) {
    throw std::invalid_argument("f_kin: expected 16-state kinematic variant");
  }
  Eigen::VectorXd dx(16);
  rigid_rows(x.x, x.x.segment<3>(kExtraIdx), kGravityW, dx);
  dx.segment<3>(kExtraIdx).setZero();
  return dx;
}

Eigen::VectorXd f_gp(const ModelState& x, const ControlInput& u, const NominalParams& params,
                     const CorrectionMap& corr) {
  if (x.kind != ModelKind::GpAugmented) {
    throw std::invalid_argument("f_gp: expected 16-state GP variant");
  }
  (void)corr;  // the correction rows are fixed by the state layout
  Eigen::VectorXd dx(16);
  const Vec3 a_body = thrust_accel(u, params) + Vec3(x.x.segment<3>(kExtraIdx));
  rigid_rows(x.x, a_body, params.gravity, dx);
  dx.segment<3>(kExtraIdx).setZero();
  return dx;
}

Eigen::VectorXd model_deriv(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const NominalParams& params) {
  Eigen::VectorXd dx(x.size());
  switch (kind) {
    case ModelKind::Kinematic:
      rigid_rows(x, x.segment<3>(kExtraIdx), params.gravity, dx);
      dx.segment<3>(kExtraIdx).setZero();
      break;
    case ModelKind::Dynamic:
      rigid_rows(x, thrust_accel({u[0]}, params), params.gravity, dx);
      break;
    case ModelKind::GpAugmented:
      rigid_rows(x, thrust_accel({u[0]}, params) + Vec3(x.segment<3>(kExtraIdx)),
                 params.gravity, dx);
      dx.segment<3>(kExtraIdx).setZero();
      break;
  }
  return dx;
}

Eigen::VectorXd f_rk4_raw(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const NominalParams& params, double dt) {
  Eigen::VectorXd next = rk4_step(
      [kind, &params](const Eigen::VectorXd& xs, const Eigen::VectorXd& us) {
        return model_deriv(kind, xs, us, params);
      },
      x, u, dt);
  normalize_quat_block(next);
  return next;
}

ModelState f_rk4(ModelKind kind, const ModelState& x, const ControlInput& u,
                 const NominalParams& params, double dt) {
  if (x.kind != kind) {
    throw std::invalid_argument("f_rk4: state variant does not match model kind");
  }
  Eigen::VectorXd uvec(input_dim(kind));
  if (uvec.size() > 0) uvec[0] = u.thrust;
  return {kind, f_rk4_raw(kind, x.x, uvec, params, dt)};
}

Eigen::VectorXd output_h(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != state_dim(kind)) {
    throw std::invalid_argument("output_h: state dimension does not match model kind");
  }
  Eigen::VectorXd y(output_dim(kind));
  y.segment<3>(0) = x.segment<3>(kPosIdx);
  y.segment<3>(3) = x.segment<3>(kOmegaIdx);
  switch (kind) {
    case ModelKind::Kinematic:
      y.segment<3>(6) = x.segment<3>(kExtraIdx);
      break;
    case ModelKind::Dynamic:
      y[6] = u[0];
      break;
    case ModelKind::GpAugmented:
      y[6] = u[0];
      y.segment<3>(7) = x.segment<3>(kExtraIdx);
      break;
  }
  return y;
}

}  // namespace mhe
