#pragma once

#include "mhe/data_pipeline.hpp"
#include "mhe/estimator.hpp"
#include "mhe/rng.hpp"
#include "mhe/vehicle_models.hpp"

#include <cstdint>
#include <vector>

namespace mhe {

enum class TrajectoryKind { Lemniscate, SlantedCircle, Hover };

const char* trajectory_name(TrajectoryKind kind);
TrajectoryKind trajectory_from_name(const std::string& name);

struct ReferencePoint {
  Vec3 p;
  Vec3 v;
  Vec3 a;
};

// Smoothstep time warp: the trajectory phase accelerates from hover over
// ramp_s, holds full rate for cruise_s, and decelerates back to rest.
struct TrajectoryTiming {
  double ramp_s = 8.0;
  double cruise_s = 8.0;

  double total_s() const { return 2.0 * ramp_s + cruise_s; }
};

/// Analytic reference position and its first two derivatives at time t ≥ 0.
/// Peak speed at full warp: 11.3 m/s (lemniscate), 8.7 m/s (slanted circle).
ReferencePoint reference(TrajectoryKind kind, double t, const TrajectoryTiming& timing = {});

/// Trajectory phase θ(t) under the same warp (used for payload triggers).
double reference_phase(TrajectoryKind kind, double t, const TrajectoryTiming& timing = {});

struct TrueState {
  Vec3 p{0.0, 0.0, 0.0};
  Quaternion q;
  Vec3 v{0.0, 0.0, 0.0};
  Vec3 w{0.0, 0.0, 0.0};
  double mass = 1.0;  // kg, total (base + carried payload)
};

// Body-frame rotor-drag model: a_drag = −(d + k∘|v_B|)∘v_B. Rotor drag
// acts mostly in the rotor plane, so the z coefficient is small.
struct DisturbanceConfig {
  Vec3 linear{0.35, 0.35, 0.03};   // d, 1/s
  Vec3 quadratic{0.0, 0.0, 0.0};   // k, 1/m

  void validate() const;
};

struct SensorConfig {
  double rate_hz = 100.0;
  double sigma_p = 0.0;  // m
  double sigma_w = 0.0;  // rad/s
  double sigma_a = 0.0;  // m/s²
  std::uint64_t seed = 0;

  void validate() const;
};

/// Noise presets for levels 1–3 (σ_p, σ_ω, σ_a):
/// (0.007, 0.40, 0.007), (0.5, 0.86, 0.01), (1.0, 1.72, 0.1).
SensorConfig sensors_for_level(int level, std::uint64_t seed);

struct PayloadEvent {
  double t = 0.0;          // s
  double delta_mass = 0.0;  // kg, applied instantaneously
};

struct PayloadSchedule {
  std::vector<PayloadEvent> events;

  bool empty() const { return events.empty(); }
  /// Alternating pick/drop events at the phase crossings θ ≡ 0 (pick) and
  /// θ ≡ π (drop) of the warped trajectory, at least min_dwell_s apart.
  static PayloadSchedule pick_and_place(TrajectoryKind kind, const TrajectoryTiming& timing,
                                        double delta_mass, double min_dwell_s = 6.0);
};

struct ControllerGains {
  double kp = 10.0;     // 1/s², position error to acceleration
  double kd = 6.0;      // 1/s, velocity error to acceleration
  double k_att = 10.0;  // 1/s, tilt error to body-rate command
  double f_max = 45.0;  // N
};

struct ControlCommand {
  double thrust = 0.0;  // N
  Vec3 omega_cmd{0.0, 0.0, 0.0};
};

/// Differential-flatness feedforward plus PD feedback; collective thrust is
/// the nominal-mass projection of the desired force on body z, body-rate
/// command steers body z toward the desired acceleration with yaw held.
ControlCommand controller(const TrueState& x, const ReferencePoint& ref, double nominal_mass,
                          const ControllerGains& gains = {});

/// True specific force in body frame (thrust + drag accelerations, no gravity).
Vec3 specific_force(const TrueState& x, double f_thrust, const DisturbanceConfig& dist);

/// Ground-truth propagation over dt: rigid body with body-frame drag and a
/// first-order body-rate lag toward omega_cmd (time constant tau_att_s).
TrueState true_step(const TrueState& x, double f_thrust, const Vec3& omega_cmd,
                    const DisturbanceConfig& dist, double dt, double tau_att_s = 0.05);

// Per-channel noise generators split from one seed by fixed offsets.
struct SensorRng {
  explicit SensorRng(std::uint64_t seed);
  GaussianStream pos;
  GaussianStream gyro;
  GaussianStream accel;
};

/// Noisy sensor sample of the true state; deterministic under a fixed seed.
MeasurementFrame sense(const TrueState& x, double f_thrust, const DisturbanceConfig& dist,
                       const SensorConfig& cfg, SensorRng& rng, double t);

struct SimConfig {
  TrajectoryKind trajectory = TrajectoryKind::Lemniscate;
  TrajectoryTiming timing;
  double base_mass = 1.0;  // kg, known to the estimators
  DisturbanceConfig disturbance;
  SensorConfig sensors;
  PayloadSchedule payload;
  ControllerGains gains;
  double attitude_tau_s = 0.05;
  double abort_pos_error = 20.0;  // m
};

/// Closed-loop flight at the sensor rate; returns measurements, inputs,
/// events and the ground-truth trace. Same seed, same log, bit for bit.
FlightLog run_flight(const SimConfig& cfg);

}  // namespace mhe
