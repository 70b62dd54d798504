#include "mhe/gp.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mhe {

namespace {

constexpr double kLogParamBound = 12.0;  // clamp for log-space ascent

Eigen::MatrixXd gram(const Eigen::VectorXd& z, const RbfHyperparams& hp) {
  const int n = static_cast<int>(z.size());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = hp.signal_var + hp.noise_var;
    for (int j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = kernel(z[i], z[j], hp);
    }
  }
  return k;
}

// Cholesky with escalating diagonal jitter; throws when the matrix stays
// indefinite after the retries.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& k, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = k.trace() / static_cast<double>(k.rows());
  for (double jitter = 1e-12; jitter <= 1e-4; jitter *= 100.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter * scale;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError(std::string(what) + ": Gram matrix is not positive definite");
}

Eigen::Vector3d to_log(const RbfHyperparams& hp) {
  return {std::log(hp.length_scale), 0.5 * std::log(hp.signal_var),
          0.5 * std::log(hp.noise_var)};
}

RbfHyperparams from_log(const Eigen::Vector3d& t) {
  return {std::exp(t[0]), std::exp(2.0 * t[1]), std::exp(2.0 * t[2])};
}

}  // namespace

void RbfHyperparams::validate() const {
  if (!(length_scale > 0.0) || !(signal_var > 0.0) || !(noise_var > 0.0)) {
    throw std::invalid_argument("RbfHyperparams: all parameters must be strictly positive");
  }
}

void TrainingSet::validate() const {
  if (inputs.size() != targets.size()) {
    throw std::invalid_argument("TrainingSet: inputs and targets differ in length");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("TrainingSet: non-finite values");
  }
}

double kernel(double z_i, double z_j, const RbfHyperparams& hp) {
  const double d = z_i - z_j;
  return hp.signal_var * std::exp(-0.5 * d * d / (hp.length_scale * hp.length_scale));
}

LogMarginal log_marginal_likelihood(const TrainingSet& ts, const RbfHyperparams& hp) {
  ts.validate();
  hp.validate();
  const int n = ts.size();
  const Eigen::VectorXd& z = ts.inputs;

  const Eigen::MatrixXd k = gram(z, hp);
  const auto llt = robust_llt(k, "log_marginal_likelihood");
  const Eigen::VectorXd alpha = llt.solve(ts.targets);

  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));

  LogMarginal out;
  out.value = -0.5 * ts.targets.dot(alpha) - 0.5 * log_det -
              0.5 * n * std::log(2.0 * M_PI);

  // dLML/dθ = ½·tr((ααᵀ − K⁻¹)·dK/dθ)
  const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;

  const double inv_l2 = 1.0 / (hp.length_scale * hp.length_scale);
  double g_logl = 0.0, g_logsf = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d2 = (z[i] - z[j]) * (z[i] - z[j]);
      const double e = hp.signal_var * std::exp(-0.5 * d2 * inv_l2);
      g_logl += w(i, j) * e * d2 * inv_l2;
      g_logsf += w(i, j) * 2.0 * e;
    }
  }
  out.grad[0] = 0.5 * g_logl;
  out.grad[1] = 0.5 * g_logsf;
  out.grad[2] = hp.noise_var * w.trace();  // ½·tr(W·2σ_n²I)
  return out;
}

DenseGp::DenseGp(TrainingSet ts, RbfHyperparams hp) : ts_(std::move(ts)), hp_(hp) {
  ts_.validate();
  hp_.validate();
  chol_ = robust_llt(gram(ts_.inputs, hp_), "DenseGp");
  alpha_ = chol_.solve(ts_.targets);
  double log_det = 0.0;
  for (int i = 0; i < ts_.size(); ++i) log_det += 2.0 * std::log(chol_.matrixLLT()(i, i));
  log_marginal_ = -0.5 * ts_.targets.dot(alpha_) - 0.5 * log_det -
                  0.5 * ts_.size() * std::log(2.0 * M_PI);
}

Prediction DenseGp::predict(double z_star) const {
  const int n = ts_.size();
  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i) k_star[i] = kernel(ts_.inputs[i], z_star, hp_);
  Prediction out;
  out.mean = k_star.dot(alpha_);
  const double var = hp_.signal_var - k_star.dot(chol_.solve(k_star));
  out.var = std::max(0.0, var);
  return out;
}

DenseGp fit_dense(const TrainingSet& ts, const RbfHyperparams& init, const FitOptions& opts) {
  ts.validate();
  init.validate();
  if (ts.size() < 2) {
    throw std::invalid_argument("fit_dense: need at least two training points");
  }

  // Fixed offsets make the multi-start deterministic.
  const Eigen::Vector3d offsets[3] = {{0.0, 0.0, 0.0}, {1.0, 0.5, -1.0}, {-1.0, -0.5, 1.0}};
  const int starts = std::clamp(opts.num_starts, 1, 3);

  Eigen::Vector3d best_theta = to_log(init);
  double best_value = -std::numeric_limits<double>::infinity();

  for (int s = 0; s < starts; ++s) {
    Eigen::Vector3d theta = to_log(init) + offsets[s];
    theta = theta.cwiseMax(-kLogParamBound).cwiseMin(kLogParamBound);
    LogMarginal cur = log_marginal_likelihood(ts, from_log(theta));

    double step = 0.1;
    for (int it = 0; it < opts.max_iterations; ++it) {
      if (cur.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) break;

      // backtracking ascent along the gradient
      bool improved = false;
      while (step > 1e-14) {
        Eigen::Vector3d cand =
            (theta + step * cur.grad).cwiseMax(-kLogParamBound).cwiseMin(kLogParamBound);
        LogMarginal next = log_marginal_likelihood(ts, from_log(cand));
        if (next.value > cur.value) {
          theta = cand;
          cur = next;
          step = std::min(step * 2.0, 10.0);
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }

    if (cur.value > best_value) {
      best_value = cur.value;
      best_theta = theta;
    }
  }

  return DenseGp(ts, from_log(best_theta));
}

namespace {

Eigen::VectorXd quantile_inducing(const Eigen::VectorXd& z, int m) {
  const int n = static_cast<int>(z.size());
  Eigen::VectorXd sorted = z;
  std::sort(sorted.data(), sorted.data() + n);
  Eigen::VectorXd u(m);
  for (int j = 0; j < m; ++j) {
    const int idx = std::min<int>(n - 1, static_cast<int>((j + 0.5) * n / m));
    u[j] = sorted[idx];
  }
  return u;
}

void jitter_duplicates(Eigen::VectorXd& u) {
  std::sort(u.data(), u.data() + u.size());
  const double span = std::max(1e-9, u[u.size() - 1] - u[0]);
  for (int j = 1; j < u.size(); ++j) {
    if (u[j] - u[j - 1] < 1e-12 * span) {
      u[j] = u[j - 1] + 1e-9 * span;
    }
  }
}

}  // namespace

SparseGp sparsify_at(const DenseGp& gp, Eigen::VectorXd inducing) {
  const TrainingSet& ts = gp.training_set();
  const RbfHyperparams& hp = gp.hyperparams();
  const int n = ts.size();
  const int m = static_cast<int>(inducing.size());
  if (m < 1 || m > n) {
    throw std::invalid_argument("sparsify: need 1 ≤ m ≤ n inducing points");
  }
  jitter_duplicates(inducing);

  Eigen::MatrixXd k_uu(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      k_uu(i, j) = k_uu(j, i) = kernel(inducing[i], inducing[j], hp);
    }
  }
  // small jitter keeps K_uu invertible without disturbing the m = n limit
  k_uu.diagonal().array() += 1e-10 * hp.signal_var;

  Eigen::MatrixXd k_fu(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      k_fu(i, j) = kernel(ts.inputs[i], inducing[j], hp);
    }
  }

  const auto llt_uu = robust_llt(k_uu, "sparsify(K_uu)");

  // FITC: Λ = diag(K_ff − Q_ff) + σ_n²·I with Q_ff = K_fu·K_uu⁻¹·K_uf
  const Eigen::MatrixXd v = llt_uu.solve(k_fu.transpose());  // K_uu⁻¹ K_uf, m×n
  Eigen::VectorXd lambda(n);
  for (int i = 0; i < n; ++i) {
    const double q_ii = k_fu.row(i).dot(v.col(i));
    lambda[i] = std::max(1e-12, hp.signal_var - q_ii + hp.noise_var);
  }

  const Eigen::VectorXd lam_inv = lambda.cwiseInverse();
  const Eigen::MatrixXd a = k_uu + k_fu.transpose() * lam_inv.asDiagonal() * k_fu;
  const auto llt_a = robust_llt(a, "sparsify(posterior)");
  const Eigen::MatrixXd sigma = llt_a.solve(Eigen::MatrixXd::Identity(m, m));

  SparseGp out;
  out.hp_ = hp;
  out.inducing_ = std::move(inducing);
  out.weights_ = sigma * (k_fu.transpose() * (lam_inv.asDiagonal() * ts.targets));
  out.var_core_ = llt_uu.solve(Eigen::MatrixXd::Identity(m, m)) - sigma;

  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += out.predict(ts.inputs[i]).var;
  out.avg_train_var_ = acc / n;
  return out;
}

SparseGp sparsify(const DenseGp& gp, int m) {
  return sparsify_at(gp, quantile_inducing(gp.training_set().inputs, m));
}

Prediction SparseGp::predict(double z_star) const {
  const int m = static_cast<int>(inducing_.size());
  Eigen::VectorXd k_star(m);
  for (int j = 0; j < m; ++j) k_star[j] = kernel(inducing_[j], z_star, hp_);
  Prediction out;
  out.mean = k_star.dot(weights_);
  out.var = std::max(0.0, hp_.signal_var - k_star.dot(var_core_ * k_star));
  return out;
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

void SparseGp::to_json(std::ostream& os) const {
  const int m = static_cast<int>(inducing_.size());
  nlohmann::json j;
  j["length_scale"] = hp_.length_scale;
  j["signal_var"] = hp_.signal_var;
  j["noise_var"] = hp_.noise_var;
  j["inducing"] = vector_to_json(inducing_);
  j["weights"] = vector_to_json(weights_);
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m; ++i) rows.push_back(vector_to_json(var_core_.row(i)));
  j["var_core"] = rows;
  j["avg_train_var"] = avg_train_var_;
  os << j.dump(2);
}

std::string SparseGp::to_json_string() const {
  std::ostringstream os;
  to_json(os);
  return os.str();
}

SparseGp SparseGp::from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SparseGp out;
  out.hp_.length_scale = j.at("length_scale").get<double>();
  out.hp_.signal_var = j.at("signal_var").get<double>();
  out.hp_.noise_var = j.at("noise_var").get<double>();
  out.hp_.validate();
  out.inducing_ = vector_from_json(j.at("inducing"));
  out.weights_ = vector_from_json(j.at("weights"));
  const auto& rows = j.at("var_core");
  const int m = static_cast<int>(out.inducing_.size());
  if (static_cast<int>(rows.size()) != m || out.weights_.size() != m) {
    throw std::invalid_argument("SparseGp: inconsistent model file dimensions");
  }
  out.var_core_.resize(m, m);
  for (int i = 0; i < m; ++i) out.var_core_.row(i) = vector_from_json(rows[i]);
  out.avg_train_var_ = j.at("avg_train_var").get<double>();
  return out;
}

TripletPrediction GpTriplet::predict(const Vec3& a_meas) const {
  TripletPrediction out;
  for (int i = 0; i < 3; ++i) {
    const Prediction p = axis[i].predict(a_meas[i]);
    out.mean[i] = p.mean;
    out.var[i] = p.var;
  }
  return out;
}

Vec3 GpTriplet::avg_train_var() const {
  return {axis[0].avg_train_var(), axis[1].avg_train_var(), axis[2].avg_train_var()};
}

void GpTriplet::save(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "gp-triplet-v1";
  const char* names[3] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) {
    j["axes"][names[i]] = nlohmann::json::parse(axis[i].to_json_string());
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("GpTriplet::save: cannot write " + path);
  os << j.dump(2) << "\n";
}

GpTriplet GpTriplet::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("GpTriplet::load: cannot read " + path);
  nlohmann::json j;
  is >> j;
  if (j.value("format", "") != "gp-triplet-v1") {
    throw std::runtime_error("GpTriplet::load: unrecognized model file " + path);
  }
  GpTriplet out;
  const char* names[3] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) {
    out.axis[i] = SparseGp::from_json_string(j.at("axes").at(names[i]).dump());
  }
  return out;
}

}  // namespace mhe
