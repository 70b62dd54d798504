#pragma once

#include "mhe/core_math.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace mhe {

// RBF kernel hyperparameters. Noise enters the Gram matrix diagonal only.
struct RbfHyperparams {
  double length_scale = 1.0;  // L, input units
  double signal_var = 1.0;    // σ_f²
  double noise_var = 1e-2;    // σ_n²

  void validate() const;
};

// 1-D training set: inputs z and residual targets c, equal length.
struct TrainingSet {
  Eigen::VectorXd inputs;
  Eigen::VectorXd targets;

  int size() const { return static_cast<int>(inputs.size()); }
  void validate() const;
};

/// RBF kernel κ(z_i, z_j) = σ_f²·exp(−(z_i−z_j)²/(2L²)).
double kernel(double z_i, double z_j, const RbfHyperparams& hp);

struct Prediction {
  double mean = 0.0;
  double var = 0.0;  // clamped at zero
};

struct LogMarginal {
  double value = 0.0;
  Eigen::Vector3d grad;  // d/d(log L), d/d(log σ_f), d/d(log σ_n)
};

/// Log marginal likelihood of the training set under the RBF prior, with
/// analytic gradients in log-parameter space.
LogMarginal log_marginal_likelihood(const TrainingSet& ts, const RbfHyperparams& hp);

struct FitOptions {
  int max_iterations = 200;
  double grad_tol = 1e-6;  // ∞-norm on the log-space gradient
  int num_starts = 3;
};

class DenseGp {
 public:
  DenseGp(TrainingSet ts, RbfHyperparams hp);  // factorizes, no hyperparameter fit

  Prediction predict(double z_star) const;

  const RbfHyperparams& hyperparams() const { return hp_; }
  const TrainingSet& training_set() const { return ts_; }
  double log_marginal() const { return log_marginal_; }

 private:
  TrainingSet ts_;
  RbfHyperparams hp_;
  Eigen::LLT<Eigen::MatrixXd> chol_;  // of K = κ(z,z) + σ_n²·I
  Eigen::VectorXd alpha_;             // K⁻¹ c
  double log_marginal_ = 0.0;
};

/// Fits hyperparameters by maximizing the log marginal likelihood with
/// multi-start gradient ascent in log space, then factorizes the Gram matrix.
DenseGp fit_dense(const TrainingSet& ts, const RbfHyperparams& init,
                  const FitOptions& opts = {});

// Sparse posterior over m inducing inputs (FITC construction). Prediction
// cost is independent of the training-set size: O(m) for the mean,
// O(m²) for the variance.
class SparseGp {
 public:
  SparseGp() = default;  // empty model; filled by sparsify or from_json_string

  Prediction predict(double z_star) const;

  const RbfHyperparams& hyperparams() const { return hp_; }
  const Eigen::VectorXd& inducing_inputs() const { return inducing_; }
  /// Predictive variance averaged over the training inputs at fit time.
  double avg_train_var() const { return avg_train_var_; }

  void to_json(std::ostream& os) const;
  std::string to_json_string() const;
  static SparseGp from_json_string(const std::string& text);

  friend SparseGp sparsify_at(const DenseGp& gp, Eigen::VectorXd inducing);

 private:
  RbfHyperparams hp_;
  Eigen::VectorXd inducing_;  // m
  Eigen::VectorXd weights_;   // mean(z*) = k_*uᵀ · weights
  Eigen::MatrixXd var_core_;  // var(z*) = σ_f² − k_*uᵀ · var_core · k_*u
  double avg_train_var_ = 0.0;
};

/// Sparsifies a dense GP onto m inducing inputs placed at empirical
/// quantiles of the training inputs. Requires 1 ≤ m ≤ n.
SparseGp sparsify(const DenseGp& gp, int m);

/// Same, with caller-chosen inducing inputs (duplicates are jittered apart).
SparseGp sparsify_at(const DenseGp& gp, Eigen::VectorXd inducing);

struct TripletPrediction {
  Vec3 mean;
  Vec3 var;
};

// Three independent per-axis residual models μ_ax, μ_ay, μ_az: axis i maps
// the body-frame accelerometer reading on axis i to the acceleration
// residual on axis i.
struct GpTriplet {
  SparseGp axis[3];

  TripletPrediction predict(const Vec3& a_meas) const;
  Vec3 avg_train_var() const;

  void save(const std::string& path) const;
  static GpTriplet load(const std::string& path);
};

}  // namespace mhe
