#pragma once

#include "mhe/core_math.hpp"
#include "mhe/estimator.hpp"
#include "mhe/gp.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mhe {

// One sample of the canonical flight record. The q/v blocks carry the
// attitude and velocity reference available alongside the raw sensors
// (ground truth in simulation, motion capture in external datasets).
struct LogRow {
  double t = 0.0;   // s
  Vec3 p_meas{0.0, 0.0, 0.0};
  Quaternion q_ref;
  Vec3 v_ref{0.0, 0.0, 0.0};
  Vec3 w_meas{0.0, 0.0, 0.0};
  Vec3 a_meas{0.0, 0.0, 0.0};  // specific force
  double thrust = 0.0;         // N
  double mass = 0.0;           // kg, total vehicle mass at this sample
  double event = 0.0;          // payload delta applied at this sample, kg
};

struct TruthRow {
  double t = 0.0;
  Vec3 p{0.0, 0.0, 0.0};
  Quaternion q;
  Vec3 v{0.0, 0.0, 0.0};
  Vec3 w{0.0, 0.0, 0.0};
  Vec3 a_body{0.0, 0.0, 0.0};  // clean specific force
  double mass = 0.0;
  double event = 0.0;
};

struct FlightLog {
  std::vector<LogRow> rows;
  std::vector<TruthRow> truth;  // empty when unavailable; else one per row

  bool has_truth() const { return !truth.empty(); }
  int size() const { return static_cast<int>(rows.size()); }
  void validate() const;

  MeasurementFrame frame(int i) const {
    const LogRow& r = rows[static_cast<size_t>(i)];
    return {r.t, r.p_meas, r.w_meas, r.a_meas, r.thrust};
  }
};

// Canonical CSV header. Simulated logs store the measurement stream here and
// the ground-truth trace in a sibling file with the same header.
inline constexpr const char* kFlightLogHeader =
    "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,ax,ay,az,f_thrust,mass,event";

std::string truth_path_for(const std::string& log_path);

/// Writes `path` (and `<stem>.truth.csv` when truth is present), floats with
/// 9 significant digits, '#' comment lines allowed on read.
void save_flight_log(const FlightLog& log, const std::string& path);

/// Reads a canonical log; attaches the truth sibling when it exists.
FlightLog load_flight_log(const std::string& path);

// Header-name mapping for external CSVs.
struct ColumnMap {
  std::string time = "t";
  std::array<std::string, 3> position{"px", "py", "pz"};
  std::array<std::string, 4> quaternion{"qw", "qx", "qy", "qz"};
  std::array<std::string, 3> velocity{"vx", "vy", "vz"};
  std::array<std::string, 3> body_rate{"wx", "wy", "wz"};
  std::array<std::string, 3> accel{"ax", "ay", "az"};
  std::string thrust = "f_thrust";
  std::string mass = "mass";    // optional: empty string disables
  std::string event = "event";  // optional: empty string disables

  // When the thrust column is mass-normalized (m/s²), it is scaled by
  // vehicle_mass into Newtons at ingestion.
  bool thrust_mass_normalized = false;
  double vehicle_mass = 1.0;
};

struct IngestReport {
  int rows_kept = 0;
  int rows_dropped = 0;  // non-finite rows
};

/// Parses and validates an external CSV. Fails naming the missing column;
/// requires at least two finite rows.
FlightLog ingest_csv(const std::string& path, const ColumnMap& map,
                     IngestReport* report = nullptr);

/// Returns a copy with Gaussian noise on the position channel only.
FlightLog add_position_noise(const FlightLog& log, double sigma_p, std::uint64_t seed);

struct ResidualSample {
  Vec3 input;   // a_meas, m/s²
  Vec3 target;  // body-frame acceleration residual, m/s²
};

/// Acceleration residual of the nominal thrust model:
///   â_B = (0,0,f/m),  a = a_meas + q̂⁻¹⊙g_W,  â = q̂⁻¹⊙(q̂⊙â_B + g_W),
///   target = a − â, evaluated literally in that form.
ResidualSample compute_residual(const Vec3& a_meas, const Quaternion& q_hat, double f_thrust,
                                double mass);

enum class AttitudeSource {
  KMheEstimate,  // replay a kinematic-model MHE over the log
  LogAttitude,   // use the log's attitude reference column
};

struct TrainingBuildOptions {
  AttitudeSource attitude = AttitudeSource::KMheEstimate;
  double mass = 1.0;  // kg, nominal mass for the thrust model
  int stride = 1;
  // K-MHE replay settings (used when attitude == KMheEstimate)
  int horizon_nodes = 50;
  double sigma_p = 0.007;
  double sigma_w = 0.40;
  double sigma_a = 0.007;
};

/// Per-axis 1-D training sets: axis i maps a_meas[i] to the residual's
/// component i.
std::array<TrainingSet, 3> build_training_sets(const FlightLog& log,
                                               const TrainingBuildOptions& opts);

struct TrainTripletOptions {
  TrainingBuildOptions build;
  int max_fit_points = 400;  // dense-fit subsample cap per axis
  int inducing_points = 50;
  FitOptions fit;
  bool parallel_axes = true;
};

/// Dense fit (on a subsampled set) followed by sparsification, per axis.
GpTriplet train_triplet(const FlightLog& log, const TrainTripletOptions& opts);

}  // namespace mhe
