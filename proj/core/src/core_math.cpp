#include "mhe/core_math.hpp"

#include <cmath>

namespace mhe {

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n < 1e-300) {
    return identity();
  }
  const double half = 0.5 * angle_rad;
  const double s = std::sin(half) / n;
  return {std::cos(half), axis.x() * s, axis.y() * s, axis.z() * s};
}

Quaternion Quaternion::from_rotation_matrix(const Eigen::Matrix3d& r) {
  // Shepperd's method: pick the largest of the four candidates for stability.
  Quaternion q;
  const double tr = r.trace();
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (r(2, 1) - r(1, 2)) / s;
    q.y = (r(0, 2) - r(2, 0)) / s;
    q.z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q.w = (r(2, 1) - r(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (r(0, 1) + r(1, 0)) / s;
    q.z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q.w = (r(0, 2) - r(2, 0)) / s;
    q.x = (r(0, 1) + r(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (r(1, 2) + r(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q.w = (r(1, 0) - r(0, 1)) / s;
    q.x = (r(0, 2) + r(2, 0)) / s;
    q.y = (r(1, 2) + r(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return q.normalized();
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n < 1e-300) {
    throw NumericalError("cannot normalize zero quaternion");
  }
  return {w / n, x / n, y / n, z / n};
}

Eigen::Matrix3d Quaternion::rotation_matrix() const {
  Eigen::Matrix3d r;
  const double ww = w * w, xx = x * x, yy = y * y, zz = z * z;
  r(0, 0) = ww + xx - yy - zz;
  r(0, 1) = 2.0 * (x * y - w * z);
  r(0, 2) = 2.0 * (x * z + w * y);
  r(1, 0) = 2.0 * (x * y + w * z);
  r(1, 1) = ww - xx + yy - zz;
  r(1, 2) = 2.0 * (y * z - w * x);
  r(2, 0) = 2.0 * (x * z - w * y);
  r(2, 1) = 2.0 * (y * z + w * x);
  r(2, 2) = ww - xx - yy + zz;
  return r;
}

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Vec3 quat_rotate(const Quaternion& q, const Vec3& v) {
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("quat_rotate: quaternion is not unit norm");
  }
  const Quaternion qv{0.0, v.x(), v.y(), v.z()};
  const Quaternion r = quat_mul(quat_mul(q, qv), q.conjugate());
  return {r.x, r.y, r.z};
}

Quaternion quat_deriv(const Quaternion& q, const Vec3& omega) {
  return quat_mul(q, Quaternion{0.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z()});
}

double attitude_error_deg(const Quaternion& q_est, const Quaternion& q_true) {
  double d = std::abs(q_est.w * q_true.w + q_est.x * q_true.x + q_est.y * q_true.y +
                      q_est.z * q_true.z);
  d = std::min(d, 1.0);
  return rad2deg(2.0 * std::acos(d));
}

Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("rk4_step: dt must be positive");
  }
  const Eigen::VectorXd k1 = f(x, u);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, u);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, u);
  const Eigen::VectorXd k4 = f(x + dt * k3, u);
  if (!k1.allFinite() || !k2.allFinite() || !k3.allFinite() || !k4.allFinite()) {
    throw NumericalError("rk4_step: vector field evaluated to non-finite values");
  }
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace mhe
