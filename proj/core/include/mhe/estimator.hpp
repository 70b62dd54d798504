#pragma once

#include "mhe/gp.hpp"
#include "mhe/vehicle_models.hpp"

#include <deque>
#include <optional>
#include <vector>

namespace mhe {

// Discrete-time model consumed by the moving-horizon solver. `payload` is
// the online-estimated parameter; models without it ignore the argument.
class ShootingModel {
 public:
  virtual ~ShootingModel() = default;

  virtual int state_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual int input_dim() const = 0;

  /// One integration step x_{k+1} = f_RK4(x_k, u_k).
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt,
                               double payload) const = 0;
  /// Output map ŷ = h(x, u).
  virtual Eigen::VectorXd output(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;

  virtual bool has_payload_param() const { return false; }
  /// Start index of a unit-quaternion block to renormalize, -1 if none.
  virtual int quaternion_offset() const { return -1; }
};

// The three quadrotor estimation models behind the ShootingModel interface.
class QuadrotorShootingModel final : public ShootingModel {
 public:
  QuadrotorShootingModel(ModelKind kind, NominalParams params)
      : kind_(kind), params_(params) {}

  int state_dim() const override { return mhe::state_dim(kind_); }
  int output_dim() const override { return mhe::output_dim(kind_); }
  int input_dim() const override { return mhe::input_dim(kind_); }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt,
                       double payload) const override {
    NominalParams p = params_;
    p.payload = payload;
    return f_rk4_raw(kind_, x, u, p, dt);
  }
  Eigen::VectorXd output(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override {
    return output_h(kind_, x, u);
  }

  bool has_payload_param() const override { return kind_ != ModelKind::Kinematic; }
  int quaternion_offset() const override { return kQuatIdx; }

  ModelKind kind() const { return kind_; }
  const NominalParams& params() const { return params_; }

 private:
  ModelKind kind_;
  NominalParams params_;
};

// Diagonal covariances weighting the least-squares terms; residuals are
// weighted by the inverse covariance.
struct WeightConfig {
  Eigen::VectorXd r_diag;          // measurement noise covariance (Eq. ordering: p, ω, ...)
  Eigen::VectorXd q_diag;          // process-noise covariance per state
  Eigen::VectorXd q_arrival_diag;  // arrival-cost covariance per state
  double q_param = 1e-2;           // arrival covariance of the payload parameter

  void validate(int state_dim, int output_dim) const;
};

struct Frame {
  double t = 0.0;
  Eigen::VectorXd y;
  Eigen::VectorXd u;
};

// Sliding window of at most N+1 timestamped frames plus the arrival prior
// (x̄, m̄_p). Frame spacing must stay within ±10% of the nominal dt.
class HorizonBuffer {
 public:
  HorizonBuffer(int horizon_nodes, double dt, Eigen::VectorXd arrival_state,
                double arrival_payload = 0.0);

  /// Appends a frame, evicting the oldest when above capacity.
  /// Returns true when an eviction happened.
  bool push_frame(double t, Eigen::VectorXd y, Eigen::VectorXd u);

  int size() const { return static_cast<int>(frames_.size()); }
  bool full() const { return size() == capacity_ + 1; }
  const Frame& frame(int i) const { return frames_[static_cast<size_t>(i)]; }
  double dt() const { return dt_; }
  int horizon_nodes() const { return capacity_; }

  const Eigen::VectorXd& arrival_state() const { return arrival_state_; }
  double arrival_payload() const { return arrival_payload_; }
  void set_arrival(Eigen::VectorXd state, double payload);
  int arrival_update_count() const { return arrival_updates_; }

 private:
  int capacity_;  // N; the buffer holds at most N+1 frames
  double dt_;
  std::deque<Frame> frames_;
  Eigen::VectorXd arrival_state_;
  double arrival_payload_ = 0.0;
  int arrival_updates_ = 0;
};

struct MheSolution {
  std::vector<Eigen::VectorXd> nodes;  // one state per frame in the window
  Eigen::VectorXd current;             // nodes.back()
  double payload = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double solve_time_s = 0.0;
  bool degraded = false;  // solver could not decrease the objective
};

struct EstimatorConfig {
  ModelKind kind = ModelKind::Dynamic;
  int horizon_nodes = 50;  // N
  double dt = 0.01;        // s
  WeightConfig weights;
  int max_iterations = 1;  // Gauss-Newton iterations per sample (real-time iteration)
  double levenberg_lambda = 1e-8;
  bool estimate_payload = false;
  double payload_min = 0.0;
  double payload_max = 1.0;
  double step_tol = 1e-12;  // early stop on the Newton-step ∞-norm

  void validate() const;
};

/// Damped Gauss-Newton multiple-shooting solve over the buffered window.
/// Warm start defaults to forward propagation from the arrival state.
/// Deterministic: identical inputs produce identical solutions.
MheSolution solve(const ShootingModel& model, const HorizonBuffer& buf,
                  const EstimatorConfig& cfg,
                  const std::vector<Eigen::VectorXd>* warm_nodes = nullptr,
                  std::optional<double> warm_payload = std::nullopt);

/// Advances the arrival prior to the previous solution's node-1 state (the
/// node that leaves the estimation window on the next push).
void update_arrival(HorizonBuffer& buf, const MheSolution& last);

// Raw sensor sample handed to the estimator at each tick.
struct MeasurementFrame {
  double t = 0.0;              // s
  Vec3 p_meas{0.0, 0.0, 0.0};  // m
  Vec3 w_meas{0.0, 0.0, 0.0};  // rad/s
  Vec3 a_meas{0.0, 0.0, 0.0};  // m/s², specific force
  double thrust = 0.0;         // N
};

struct StepResult {
  Eigen::VectorXd state;  // current estimate x̂_k
  double payload = 0.0;   // m̂_p
  MheSolution solution;
  int gp_predictions = 0;  // GP evaluations made for this sample
  bool evicted = false;
};

// Stateful estimator: window maintenance, warm-started real-time-iteration
// solves, and arrival-cost carry-forward. One instance is single-threaded;
// the fitted GP triplet (GP-MHE only) is an immutable shared input.
class MovingHorizonEstimator {
 public:
  MovingHorizonEstimator(EstimatorConfig cfg, NominalParams params,
                         const ModelState& initial_state,
                         std::optional<GpTriplet> gp = std::nullopt);

  /// Assembles the model-specific measurement vector (including the single
  /// GP point prediction for GP-MHE) and advances the estimator.
  StepResult estimate_step(const MeasurementFrame& m);

  /// Same, with a caller-assembled measurement vector; rejects wrong dims.
  StepResult estimate_step_raw(double t, Eigen::VectorXd y, Eigen::VectorXd u,
                               int gp_predictions = 0);

  const EstimatorConfig& config() const { return cfg_; }
  const HorizonBuffer& buffer() const { return buf_; }
  const QuadrotorShootingModel& model() const { return model_; }

 private:
  EstimatorConfig cfg_;
  QuadrotorShootingModel model_;
  std::optional<GpTriplet> gp_;
  HorizonBuffer buf_;
  std::optional<MheSolution> prev_;
};

/// Covariance defaults per model kind at the given sensor noise levels.
/// GP-MHE weights its correction channels by the average GP predictive
/// variance when provided.
WeightConfig default_weights(ModelKind kind, double sigma_p, double sigma_w, double sigma_a,
                             const Vec3* gp_avg_var = nullptr);

}  // namespace mhe
