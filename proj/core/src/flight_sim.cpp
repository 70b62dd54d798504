#include "mhe/flight_sim.hpp"

#include "mhe/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mhe {

const char* trajectory_name(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::Lemniscate:
      return "lemniscate";
    case TrajectoryKind::SlantedCircle:
      return "circle";
    case TrajectoryKind::Hover:
      return "hover";
  }
  return "?";
}

TrajectoryKind trajectory_from_name(const std::string& name) {
  if (name == "lemniscate") return TrajectoryKind::Lemniscate;
  if (name == "circle" || name == "slanted-circle") return TrajectoryKind::SlantedCircle;
  if (name == "hover") return TrajectoryKind::Hover;
  throw std::invalid_argument("unknown trajectory '" + name +
                              "' (expected lemniscate, circle or hover)");
}

namespace {

// Phase-rate factors: peak reference speed = rate · max‖dp/dθ‖, which gives
// 11.3 m/s on the lemniscate (max‖dp/dθ‖ = 10) and 8.7 m/s on the slanted
// circle (max‖dp/dθ‖ = √26).
constexpr double kLemniscateRate = 1.13;
const double kCircleRate = 8.7 / std::sqrt(26.0);

struct Warp {
  double value = 0.0;  // W(t) = ∫ s
  double speed = 0.0;  // s(t) ∈ [0, 1]
  double accel = 0.0;  // ds/dt
};

// Smoothstep ramp profile s(t): 0 → 1 over ramp_s, hold, 1 → 0 at the end.
Warp warp_at(double t, const TrajectoryTiming& tm) {
  const double tr = tm.ramp_s;
  const double tc = tm.cruise_s;
  auto ramp_integral = [tr](double u) { return tr * (u * u * u - 0.5 * u * u * u * u); };
  Warp w;
  if (t <= 0.0) {
    return w;
  }
  if (t < tr) {
    const double u = t / tr;
    w.value = ramp_integral(u);
    w.speed = 3.0 * u * u - 2.0 * u * u * u;
    w.accel = (6.0 * u - 6.0 * u * u) / tr;
    return w;
  }
  if (t < tr + tc) {
    w.value = 0.5 * tr + (t - tr);
    w.speed = 1.0;
    return w;
  }
  if (t < 2.0 * tr + tc) {
    const double tau = t - tr - tc;
    const double u = tau / tr;
    w.value = 0.5 * tr + tc + tau - ramp_integral(u);
    w.speed = 1.0 - (3.0 * u * u - 2.0 * u * u * u);
    w.accel = -(6.0 * u - 6.0 * u * u) / tr;
    return w;
  }
  w.value = tr + tc;
  return w;
}

struct Curve {
  Vec3 p, dp, ddp;  // position and derivatives w.r.t. the phase θ
};

Curve lemniscate_curve(double th) {
  const double s2 = std::sqrt(2.0);
  Curve c;
  c.p = {5.0 * std::cos(s2 * th) - 5.0, 2.5 * std::sin(2.0 * s2 * th), 2.5};
  c.dp = {-5.0 * s2 * std::sin(s2 * th), 5.0 * s2 * std::cos(2.0 * s2 * th), 0.0};
  c.ddp = {-10.0 * std::cos(s2 * th), -20.0 * std::sin(2.0 * s2 * th), 0.0};
  return c;
}

Curve circle_curve(double th) {
  Curve c;
  c.p = {5.0 * std::cos(th), 5.0 * std::sin(th), -std::cos(th) + 2.5};
  c.dp = {-5.0 * std::sin(th), 5.0 * std::cos(th), std::sin(th)};
  c.ddp = {-5.0 * std::cos(th), -5.0 * std::sin(th), std::cos(th)};
  return c;
}

double phase_rate(TrajectoryKind kind) {
  return kind == TrajectoryKind::Lemniscate ? kLemniscateRate : kCircleRate;
}

}  // namespace

ReferencePoint reference(TrajectoryKind kind, double t, const TrajectoryTiming& timing) {
  if (!(t >= 0.0)) throw std::invalid_argument("reference: t must be non-negative");
  if (kind == TrajectoryKind::Hover) {
    return {{0.0, 0.0, 1.5}, Vec3::Zero(), Vec3::Zero()};
  }
  const Warp w = warp_at(t, timing);
  const double rate = phase_rate(kind);
  const double theta = rate * w.value;
  const double theta_dot = rate * w.speed;
  const double theta_ddot = rate * w.accel;
  const Curve c = kind == TrajectoryKind::Lemniscate ? lemniscate_curve(theta)
                                                     : circle_curve(theta);
  ReferencePoint out;
  out.p = c.p;
  out.v = c.dp * theta_dot;
  out.a = c.ddp * theta_dot * theta_dot + c.dp * theta_ddot;
  return out;
}

double reference_phase(TrajectoryKind kind, double t, const TrajectoryTiming& timing) {
  if (kind == TrajectoryKind::Hover) return 0.0;
  return phase_rate(kind) * warp_at(t, timing).value;
}

void DisturbanceConfig::validate() const {
  if ((linear.array() < 0.0).any() || (quadratic.array() < 0.0).any()) {
    throw std::invalid_argument("DisturbanceConfig: drag coefficients must be non-negative");
  }
}

void SensorConfig::validate() const {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("SensorConfig: rate must be positive");
  if (sigma_p < 0.0 || sigma_w < 0.0 || sigma_a < 0.0) {
    throw std::invalid_argument("SensorConfig: noise levels must be non-negative");
  }
}

SensorConfig sensors_for_level(int level, std::uint64_t seed) {
  SensorConfig cfg;
  cfg.seed = seed;
  // body-rate levels are specified in deg/s and stored in rad/s; the
  // rad/s reading (up to 98°/s of gyro noise) is outside any IMU class
  // and leaves no attitude information to estimate from
  switch (level) {
    case 1:
      cfg.sigma_p = 0.007;
      cfg.sigma_w = deg2rad(0.40);
      cfg.sigma_a = 0.007;
      break;
    case 2:
      cfg.sigma_p = 0.5;
      cfg.sigma_w = deg2rad(0.86);
      cfg.sigma_a = 0.01;
      break;
    case 3:
      cfg.sigma_p = 1.0;
      cfg.sigma_w = deg2rad(1.72);
      cfg.sigma_a = 0.1;
      break;
    default:
      throw std::invalid_argument("sensors_for_level: level must be 1, 2 or 3");
  }
  return cfg;
}

PayloadSchedule PayloadSchedule::pick_and_place(TrajectoryKind kind,
                                                const TrajectoryTiming& timing,
                                                double delta_mass, double min_dwell_s) {
  PayloadSchedule out;
  if (kind == TrajectoryKind::Hover) return out;
  const double total = timing.total_s();
  const double scan_dt = 1e-3;
  bool carrying = false;
  double last_event = -1e9;
  double prev_phase = reference_phase(kind, 0.0, timing);
  const double two_pi = 2.0 * M_PI;
  for (double t = scan_dt; t <= total; t += scan_dt) {
    const double phase = reference_phase(kind, t, timing);
    // pick at θ ≡ 0 (point A), drop at θ ≡ π (point B)
    const double target = carrying ? M_PI : 0.0;
    const double k_prev = std::floor((prev_phase - target) / two_pi);
    const double k_now = std::floor((phase - target) / two_pi);
    if (k_now > k_prev && phase > 1e-9 && t - last_event >= min_dwell_s) {
      out.events.push_back({t, carrying ? -delta_mass : delta_mass});
      carrying = !carrying;
      last_event = t;
    }
    prev_phase = phase;
  }
  return out;
}

ControlCommand controller(const TrueState& x, const ReferencePoint& ref, double nominal_mass,
                          const ControllerGains& gains) {
  const Vec3 a_des = ref.a + gains.kp * (ref.p - x.p) + gains.kd * (ref.v - x.v);
  const Vec3 f_des = a_des - kGravityW;  // desired specific force, world frame
  const Eigen::Matrix3d r = x.q.rotation_matrix();
  const Vec3 z_body = r.col(2);

  ControlCommand cmd;
  cmd.thrust = std::clamp(nominal_mass * f_des.dot(z_body), 0.0, gains.f_max);

  Vec3 z_des = f_des;
  if (z_des.norm() < 1e-6) {
    z_des = z_body;  // free-fall command: hold attitude
  }
  z_des.normalize();
  Vec3 y_des = z_des.cross(Vec3{1.0, 0.0, 0.0});  // yaw held at zero
  if (y_des.norm() < 1e-6) y_des = Vec3{0.0, 1.0, 0.0};
  y_des.normalize();
  const Vec3 x_des = y_des.cross(z_des);
  Eigen::Matrix3d r_des;
  r_des.col(0) = x_des;
  r_des.col(1) = y_des;
  r_des.col(2) = z_des;

  const Quaternion q_err = quat_mul(x.q.conjugate(), Quaternion::from_rotation_matrix(r_des));
  const double sgn = q_err.w >= 0.0 ? 1.0 : -1.0;
  cmd.omega_cmd = 2.0 * gains.k_att * sgn * q_err.vec();
  return cmd;
}

namespace {

Vec3 drag_accel(const Vec3& v_body, const DisturbanceConfig& dist) {
  return -(dist.linear + dist.quadratic.cwiseProduct(v_body.cwiseAbs()))
              .cwiseProduct(v_body);
}

}  // namespace

Vec3 specific_force(const TrueState& x, double f_thrust, const DisturbanceConfig& dist) {
  const Vec3 v_body = quat_rotate(x.q.conjugate(), x.v);
  return Vec3{0.0, 0.0, f_thrust / x.mass} + drag_accel(v_body, dist);
}

TrueState true_step(const TrueState& x, double f_thrust, const Vec3& omega_cmd,
                    const DisturbanceConfig& dist, double dt, double tau_att_s) {
  if (!(dt > 0.0)) throw std::invalid_argument("true_step: dt must be positive");
  if (!(tau_att_s > 0.0)) throw std::invalid_argument("true_step: lag constant must be positive");

  Eigen::VectorXd s(13);
  s.segment<3>(0) = x.p;
  s.segment<4>(3) = x.q.coeffs();
  s.segment<3>(7) = x.v;
  s.segment<3>(10) = x.w;

  // Same raw-quaternion rotation convention as the estimation models, so a
  // zero-drag truth step reduces exactly to the nominal dynamic model.
  auto deriv = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd&) {
    const Quaternion q{xs[3], xs[4], xs[5], xs[6]};
    const Vec3 v = xs.segment<3>(7);
    const Vec3 w = xs.segment<3>(10);
    const Quaternion vb_q = quat_mul(quat_mul(q.conjugate(), {0.0, v.x(), v.y(), v.z()}), q);
    const Vec3 a_body =
        Vec3{0.0, 0.0, f_thrust / x.mass} + drag_accel({vb_q.x, vb_q.y, vb_q.z}, dist);
    const Quaternion aw_q =
        quat_mul(quat_mul(q, {0.0, a_body.x(), a_body.y(), a_body.z()}), q.conjugate());
    Eigen::VectorXd ds(13);
    ds.segment<3>(0) = v;
    ds.segment<4>(3) = quat_deriv(q, w).coeffs();
    ds.segment<3>(7) = Vec3{aw_q.x, aw_q.y, aw_q.z} + kGravityW;
    ds.segment<3>(10) = (omega_cmd - w) / tau_att_s;
    return ds;
  };

  Eigen::VectorXd next = rk4_step(deriv, s, Eigen::VectorXd(), dt);
  normalize_quat_block(next, 3);

  TrueState out;
  out.p = next.segment<3>(0);
  out.q = {next[3], next[4], next[5], next[6]};
  out.v = next.segment<3>(7);
  out.w = next.segment<3>(10);
  out.mass = x.mass;
  return out;
}

SensorRng::SensorRng(std::uint64_t seed)
    : pos(mix_seed(seed, 0)), gyro(mix_seed(seed, 1)), accel(mix_seed(seed, 2)) {}

MeasurementFrame sense(const TrueState& x, double f_thrust, const DisturbanceConfig& dist,
                       const SensorConfig& cfg, SensorRng& rng, double t) {
  MeasurementFrame m;
  m.t = t;
  m.p_meas = x.p + cfg.sigma_p * Vec3{rng.pos.next(), rng.pos.next(), rng.pos.next()};
  m.w_meas = x.w + cfg.sigma_w * Vec3{rng.gyro.next(), rng.gyro.next(), rng.gyro.next()};
  m.a_meas = specific_force(x, f_thrust, dist) +
             cfg.sigma_a * Vec3{rng.accel.next(), rng.accel.next(), rng.accel.next()};
  m.thrust = f_thrust;
  return m;
}

FlightLog run_flight(const SimConfig& cfg) {
  cfg.disturbance.validate();
  cfg.sensors.validate();
  if (!(cfg.base_mass > 0.0)) throw std::invalid_argument("run_flight: mass must be positive");

  const double dt = 1.0 / cfg.sensors.rate_hz;
  const double duration = cfg.timing.total_s();
  const int n = static_cast<int>(std::llround(duration * cfg.sensors.rate_hz)) + 1;

  std::vector<PayloadEvent> events = cfg.payload.events;
  std::sort(events.begin(), events.end(),
            [](const PayloadEvent& a, const PayloadEvent& b) { return a.t < b.t; });

  TrueState x;
  x.p = reference(cfg.trajectory, 0.0, cfg.timing).p;
  x.mass = cfg.base_mass;
  SensorRng rng(cfg.sensors.seed);

  FlightLog log;
  log.rows.reserve(static_cast<size_t>(n));
  log.truth.reserve(static_cast<size_t>(n));

  size_t next_event = 0;
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;

    double event_delta = 0.0;
    while (next_event < events.size() && events[next_event].t <= t + 1e-12) {
      event_delta += events[next_event].delta_mass;
      x.mass += events[next_event].delta_mass;
      if (!(x.mass > 0.0)) {
        throw std::invalid_argument("run_flight: payload schedule drives mass non-positive");
      }
      ++next_event;
    }

    const ReferencePoint ref = reference(cfg.trajectory, t, cfg.timing);
    if ((x.p - ref.p).norm() > cfg.abort_pos_error) {
      throw std::runtime_error("run_flight: controller diverged at t=" + std::to_string(t) +
                               " (position error " + std::to_string((x.p - ref.p).norm()) +
                               " m)");
    }
    const ControlCommand cmd = controller(x, ref, cfg.base_mass, cfg.gains);
    const MeasurementFrame m = sense(x, cmd.thrust, cfg.disturbance, cfg.sensors, rng, t);

    LogRow row;
    row.t = t;
    row.p_meas = m.p_meas;
    row.q_ref = x.q;
    row.v_ref = x.v;
    row.w_meas = m.w_meas;
    row.a_meas = m.a_meas;
    row.thrust = cmd.thrust;
    row.mass = x.mass;
    row.event = event_delta;
    log.rows.push_back(row);

    TruthRow tr;
    tr.t = t;
    tr.p = x.p;
    tr.q = x.q;
    tr.v = x.v;
    tr.w = x.w;
    tr.a_body = specific_force(x, cmd.thrust, cfg.disturbance);
    tr.mass = x.mass;
    tr.event = event_delta;
    log.truth.push_back(tr);

    x = true_step(x, cmd.thrust, cmd.omega_cmd, cfg.disturbance, dt, cfg.attitude_tau_s);
  }
  return log;
}

}  // namespace mhe
