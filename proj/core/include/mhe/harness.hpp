#pragma once

#include "mhe/config.hpp"
#include "mhe/data_pipeline.hpp"
#include "mhe/estimator.hpp"
#include "mhe/flight_sim.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mhe {

struct StateTrace {
  std::vector<double> t;
  std::vector<Vec3> p;
  std::vector<Quaternion> q;
  std::vector<Vec3> v;

  int size() const { return static_cast<int>(t.size()); }
};

StateTrace truth_trace(const FlightLog& log);

struct RmseResult {
  double p = 0.0;      // m
  double q_deg = 0.0;  // geodesic attitude error, degrees
  double v = 0.0;      // m/s
};

/// RMS of the Euclidean position/velocity errors and of the attitude error
/// over aligned samples with t ≥ t₀ + warmup_s. Rejects misaligned traces.
RmseResult rmse(const StateTrace& estimates, const StateTrace& truth, double warmup_s = 0.0);

struct ReplayResult {
  StateTrace trace;
  std::vector<Eigen::VectorXd> states;  // full estimated state per sample
  std::vector<double> mass;             // m̂_p per sample (payload estimation)
  std::vector<double> solve_ms;
};

/// Runs one estimator over a recorded log (same measurement stream for every
/// estimator compared). dt is taken from the log spacing.
ReplayResult replay_estimator(const FlightLog& log, EstimatorConfig cfg,
                              const NominalParams& params,
                              const std::optional<GpTriplet>& gp);

// Block-level covariance overrides applied on top of the model defaults.
struct WeightOverrides {
  std::optional<double> q_pos, q_att, q_vel, q_rate, q_extra;
  std::optional<double> a_pos, a_att, a_vel, a_rate, a_extra;
  std::optional<double> r_thrust;
  std::optional<Vec3> r_gp;
  std::optional<double> q_param;

  void apply(WeightConfig& w, ModelKind kind) const;
};

struct ExperimentSpec {
  TrajectoryKind trajectory = TrajectoryKind::Lemniscate;
  SensorConfig sensors;  // noise level; per-repetition seeds are set below
  std::vector<ModelKind> estimators{ModelKind::Kinematic, ModelKind::Dynamic,
                                    ModelKind::GpAugmented};
  int horizon_nodes = 50;
  int max_iterations = 1;
  bool estimate_payload = false;
  bool payload_schedule = false;
  double payload_delta = 0.3;    // kg
  double payload_dwell_s = 6.0;  // min spacing of payload events
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::uint64_t train_seed = 9001;
  double warmup_s = 1.0;
  bool parallel_repetitions = true;

  TrajectoryTiming timing;
  DisturbanceConfig disturbance;
  double base_mass = 1.0;
  ControllerGains gains;
  double attitude_tau_s = 0.05;

  TrainTripletOptions gp_train;
  std::optional<GpTriplet> pretrained_gp;  // skips training when set

  std::array<WeightOverrides, 3> weight_overrides;  // indexed by ModelKind

  void validate() const;
};

struct EstimatorMetrics {
  ModelKind kind = ModelKind::Kinematic;
  double p_rmse = 0.0;
  double q_rmse_deg = 0.0;
  double v_rmse = 0.0;
  double solve_ms_mean = 0.0;
  double solve_ms_median = 0.0;
};

struct MetricsReport {
  std::vector<EstimatorMetrics> estimators;  // averaged over repetitions
  double warmup_s = 1.0;
  bool has_payload_traces = false;
  // last repetition, kept for trace/plot emission
  FlightLog last_log;
  std::vector<ReplayResult> last_traces;  // parallel to `estimators`
};

SimConfig sim_config(const ExperimentSpec& spec, std::uint64_t seed, bool with_payload);
EstimatorConfig estimator_config(const ExperimentSpec& spec, ModelKind kind,
                                 const GpTriplet* gp);

/// Simulates a training flight (train seed, no payload) and fits the
/// three-axis residual models for the spec's noise level and trajectory.
GpTriplet train_gp_for_spec(const ExperimentSpec& spec);

/// One simulated flight per seed; every estimator replays the same
/// measurement stream; metrics averaged over seeds.
MetricsReport run_comparison(const ExperimentSpec& spec);

struct SweepPoint {
  int nodes = 0;
  std::vector<EstimatorMetrics> estimators;
};

/// run_comparison per horizon length on fixed seeds.
std::vector<SweepPoint> sweep_horizon(ExperimentSpec spec, const std::vector<int>& n_list);

/// Slanted-circle flight with the alternating payload schedule; payload
/// estimation enabled for the dynamic and GP estimators.
MetricsReport run_payload_study(ExperimentSpec spec);

struct EmitOptions {
  bool timing = false;  // wall-clock files are opt-in; they are not reproducible
};

/// Writes metrics.csv, per-estimator trace CSVs and SVG plots into out_dir.
void emit_outputs(const MetricsReport& report, const std::string& out_dir,
                  const EmitOptions& opts = {});
void emit_sweep(const std::vector<SweepPoint>& sweep, const std::string& out_dir,
                const EmitOptions& opts = {});

/// Spec defaults overlaid with config-file values (documented in README).
ExperimentSpec spec_from_config(const Config& cfg);

}  // namespace mhe
