#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace mhe {

using Vec3 = Eigen::Vector3d;

/// Thrown when a model evaluation or solver step produces non-finite values.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Hamilton quaternion, scalar first (w, x, y, z), body-to-world rotation.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quaternion() = default;
  Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle_rad);
  static Quaternion from_rotation_matrix(const Eigen::Matrix3d& r);

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion normalized() const;
  Vec3 vec() const { return {x, y, z}; }
  Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
  Eigen::Matrix3d rotation_matrix() const;
};

/// Hamilton product a*b.
Quaternion quat_mul(const Quaternion& a, const Quaternion& b);

/// Rotates v by the unit quaternion q (q v q̄). Rejects |‖q‖ − 1| > 1e-6.
Vec3 quat_rotate(const Quaternion& q, const Vec3& v);

/// Quaternion rate q ⊙ (0, ω/2) for body rate ω [rad/s].
Quaternion quat_deriv(const Quaternion& q, const Vec3& omega);

/// Geodesic attitude distance 2·arccos(|⟨q_est, q_true⟩|) in degrees, in [0, 180].
double attitude_error_deg(const Quaternion& q_est, const Quaternion& q_true);

using VectorField =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// One classical explicit RK4 step of dx/dt = f(x, u) with step dt > 0.
/// States containing quaternion blocks are integrated as plain coordinates;
/// the caller renormalizes afterwards.
Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double dt);

inline double deg2rad(double d) { return d * M_PI / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / M_PI; }

}  // namespace mhe
