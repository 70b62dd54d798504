#include "mhe/estimator.hpp"

#include <chrono>
#include <cmath>

namespace mhe {

namespace {

constexpr double kFdStep = 1e-6;
constexpr int kMaxDampingRetries = 8;

bool all_positive(const Eigen::VectorXd& v) {
  return v.size() > 0 && (v.array() > 0.0).all() && v.allFinite();
}

}  // namespace

void WeightConfig::validate(int state_dim, int output_dim) const {
  if (r_diag.size() != output_dim || !all_positive(r_diag)) {
    throw std::invalid_argument("WeightConfig: R diagonal must be positive with output dim");
  }
  if (q_diag.size() != state_dim || !all_positive(q_diag)) {
    throw std::invalid_argument("WeightConfig: Q diagonal must be positive with state dim");
  }
  if (q_arrival_diag.size() != state_dim || !all_positive(q_arrival_diag)) {
    throw std::invalid_argument("WeightConfig: arrival diagonal must be positive with state dim");
  }
  if (!(q_param > 0.0)) {
    throw std::invalid_argument("WeightConfig: parameter arrival weight must be positive");
  }
}

void EstimatorConfig::validate() const {
  if (horizon_nodes < 2) throw std::invalid_argument("EstimatorConfig: need N ≥ 2");
  if (!(dt > 0.0)) throw std::invalid_argument("EstimatorConfig: dt must be positive");
  if (!(levenberg_lambda >= 0.0)) {
    throw std::invalid_argument("EstimatorConfig: damping must be non-negative");
  }
  if (max_iterations < 1) throw std::invalid_argument("EstimatorConfig: need ≥1 iteration");
  if (!(payload_min <= payload_max)) {
    throw std::invalid_argument("EstimatorConfig: empty payload bounds");
  }
}

HorizonBuffer::HorizonBuffer(int horizon_nodes, double dt, Eigen::VectorXd arrival_state,
                             double arrival_payload)
    : capacity_(horizon_nodes),
      dt_(dt),
      arrival_state_(std::move(arrival_state)),
      arrival_payload_(arrival_payload) {
  if (capacity_ < 1) throw std::invalid_argument("HorizonBuffer: capacity must be ≥ 1");
  if (!(dt_ > 0.0)) throw std::invalid_argument("HorizonBuffer: dt must be positive");
}

bool HorizonBuffer::push_frame(double t, Eigen::VectorXd y, Eigen::VectorXd u) {
  if (!frames_.empty()) {
    const double last = frames_.back().t;
    if (!(t > last)) {
      throw std::invalid_argument("HorizonBuffer: out-of-order timestamp");
    }
    if (std::abs((t - last) - dt_) > 0.1 * dt_ + 1e-12) {
      throw std::invalid_argument("HorizonBuffer: frame spacing outside dt ± 10%");
    }
  }
  frames_.push_back({t, std::move(y), std::move(u)});
  if (size() > capacity_ + 1) {
    frames_.pop_front();
    return true;
  }
  return false;
}

void HorizonBuffer::set_arrival(Eigen::VectorXd state, double payload) {
  if (state.size() != arrival_state_.size()) {
    throw std::invalid_argument("HorizonBuffer: arrival state dimension changed");
  }
  arrival_state_ = std::move(state);
  arrival_payload_ = payload;
  ++arrival_updates_;
}

void update_arrival(HorizonBuffer& buf, const MheSolution& last) {
  if (last.nodes.size() < 2) {
    throw std::invalid_argument("update_arrival: previous solution has no node 1");
  }
  buf.set_arrival(last.nodes[1], last.payload);
}

namespace {

struct Workspace {
  std::vector<Eigen::MatrixXd> a_jac;   // M-1 dynamics Jacobians
  std::vector<Eigen::VectorXd> b_jac;   // M-1 payload sensitivities
  std::vector<Eigen::MatrixXd> h_jac;   // M output Jacobians
  std::vector<Eigen::VectorXd> e_proc;  // M-1 shooting gaps
  std::vector<Eigen::VectorXd> e_meas;  // M measurement misfits
};

double eval_objective(const ShootingModel& model, const HorizonBuffer& buf, double dt,
                      bool use_param, const Eigen::VectorXd& wr, const Eigen::VectorXd& wq,
                      const Eigen::VectorXd& wa, double wp,
                      const std::vector<Eigen::VectorXd>& nodes, double payload) {
  const int m = buf.size();
  double obj = 0.0;
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd r = buf.frame(i).y - model.output(nodes[i], buf.frame(i).u);
    obj += r.dot(wr.cwiseProduct(r));
  }
  for (int i = 0; i + 1 < m; ++i) {
    const Eigen::VectorXd e = nodes[i + 1] - model.step(nodes[i], buf.frame(i).u, dt, payload);
    obj += e.dot(wq.cwiseProduct(e));
  }
  const Eigen::VectorXd d0 = nodes[0] - buf.arrival_state();
  obj += d0.dot(wa.cwiseProduct(d0));
  if (use_param) {
    const double dp = payload - buf.arrival_payload();
    obj += wp * dp * dp;
  }
  if (!std::isfinite(obj)) {
    throw NumericalError("mhe::solve: non-finite residual");
  }
  return obj;
}

void linearize(const ShootingModel& model, const HorizonBuffer& buf, double dt, bool use_param,
               const std::vector<Eigen::VectorXd>& nodes, double payload, Workspace& ws) {
  const int m = buf.size();
  const int nx = model.state_dim();
  ws.a_jac.assign(m - 1, Eigen::MatrixXd(nx, nx));
  ws.b_jac.assign(m - 1, Eigen::VectorXd::Zero(nx));
  ws.h_jac.assign(m, Eigen::MatrixXd());
  ws.e_proc.assign(m - 1, Eigen::VectorXd());
  ws.e_meas.assign(m, Eigen::VectorXd());

  for (int i = 0; i < m; ++i) {
    const Frame& fr = buf.frame(i);
    const Eigen::VectorXd h0 = model.output(nodes[i], fr.u);
    ws.e_meas[i] = fr.y - h0;
    Eigen::MatrixXd hj(h0.size(), nx);
    Eigen::VectorXd xp = nodes[i];
    for (int c = 0; c < nx; ++c) {
      xp[c] += kFdStep;
      hj.col(c) = (model.output(xp, fr.u) - h0) / kFdStep;
      xp[c] = nodes[i][c];
    }
    ws.h_jac[i] = std::move(hj);
  }

  for (int i = 0; i + 1 < m; ++i) {
    const Frame& fr = buf.frame(i);
    const Eigen::VectorXd f0 = model.step(nodes[i], fr.u, dt, payload);
    ws.e_proc[i] = nodes[i + 1] - f0;
    Eigen::VectorXd xp = nodes[i];
    for (int c = 0; c < nx; ++c) {
      xp[c] += kFdStep;
      ws.a_jac[i].col(c) = (model.step(xp, fr.u, dt, payload) - f0) / kFdStep;
      xp[c] = nodes[i][c];
    }
    if (use_param) {
      ws.b_jac[i] = (model.step(nodes[i], fr.u, dt, payload + kFdStep) - f0) / kFdStep;
    }
    if (!ws.a_jac[i].allFinite() || !ws.e_proc[i].allFinite()) {
      throw NumericalError("mhe::solve: non-finite linearization");
    }
  }
}

// Solves the symmetric positive-definite block-tridiagonal system in place
// (block Thomas elimination); rhs may carry several columns.
Eigen::MatrixXd block_tridiag_solve(std::vector<Eigen::MatrixXd>& diag,
                                    const std::vector<Eigen::MatrixXd>& upper,
                                    Eigen::MatrixXd rhs, int nx) {
  const int m = static_cast<int>(diag.size());
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> fact(m);
  auto factorize = [](Eigen::LDLT<Eigen::MatrixXd>& f, const Eigen::MatrixXd& block) {
    f.compute(block);
    if (f.info() != Eigen::Success || !f.vectorD().allFinite()) {
      throw NumericalError("block_tridiag_solve: indefinite diagonal block");
    }
  };
  factorize(fact[0], diag[0]);
  for (int i = 1; i < m; ++i) {
    const Eigen::MatrixXd s_inv_u = fact[i - 1].solve(upper[i - 1]);
    diag[i].noalias() -= upper[i - 1].transpose() * s_inv_u;
    rhs.middleRows(i * nx, nx).noalias() -=
        upper[i - 1].transpose() * fact[i - 1].solve(rhs.middleRows((i - 1) * nx, nx));
    factorize(fact[i], diag[i]);
  }
  Eigen::MatrixXd x(rhs.rows(), rhs.cols());
  x.middleRows((m - 1) * nx, nx) = fact[m - 1].solve(rhs.middleRows((m - 1) * nx, nx));
  for (int i = m - 2; i >= 0; --i) {
    x.middleRows(i * nx, nx) =
        fact[i].solve(rhs.middleRows(i * nx, nx) - upper[i] * x.middleRows((i + 1) * nx, nx));
  }
  return x;
}

}  // namespace

MheSolution solve(const ShootingModel& model, const HorizonBuffer& buf,
                  const EstimatorConfig& cfg, const std::vector<Eigen::VectorXd>* warm_nodes,
                  std::optional<double> warm_payload) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const int m = buf.size();
  const int nx = model.state_dim();
  if (m < 2) throw std::invalid_argument("mhe::solve: need at least two frames");
  if (buf.arrival_state().size() != nx) {
    throw std::invalid_argument("mhe::solve: arrival state dimension mismatch");
  }
  for (int i = 0; i < m; ++i) {
    if (buf.frame(i).y.size() != model.output_dim() ||
        buf.frame(i).u.size() != model.input_dim()) {
      throw std::invalid_argument("mhe::solve: frame dimensions do not match the model");
    }
  }
  cfg.weights.validate(nx, model.output_dim());

  const bool use_param = cfg.estimate_payload && model.has_payload_param();
  const Eigen::VectorXd wr = cfg.weights.r_diag.cwiseInverse();
  const Eigen::VectorXd wq = cfg.weights.q_diag.cwiseInverse();
  const Eigen::VectorXd wa = cfg.weights.q_arrival_diag.cwiseInverse();
  const double wp = 1.0 / cfg.weights.q_param;
  const double dt = buf.dt();
  const int qoff = model.quaternion_offset();

  auto clamp_payload = [&](double p) {
    return std::clamp(p, cfg.payload_min, cfg.payload_max);
  };
  auto postprocess = [&](std::vector<Eigen::VectorXd>& nodes) {
    if (qoff >= 0) {
      for (auto& x : nodes) normalize_quat_block(x, qoff);
    }
  };

  // initial iterate: warm start or forward propagation from the arrival state
  std::vector<Eigen::VectorXd> nodes;
  double payload = clamp_payload(warm_payload.value_or(buf.arrival_payload()));
  if (warm_nodes != nullptr) {
    if (static_cast<int>(warm_nodes->size()) != m) {
      throw std::invalid_argument("mhe::solve: warm start has wrong node count");
    }
    nodes = *warm_nodes;
  } else {
    nodes.resize(static_cast<size_t>(m));
    nodes[0] = buf.arrival_state();
    for (int i = 0; i + 1 < m; ++i) {
      nodes[i + 1] = model.step(nodes[i], buf.frame(i).u, dt, payload);
    }
  }
  postprocess(nodes);

  auto objective = [&](const std::vector<Eigen::VectorXd>& n, double p) {
    return eval_objective(model, buf, dt, use_param, wr, wq, wa, wp, n, p);
  };

  MheSolution sol;
  sol.degraded = false;
  double obj = objective(nodes, payload);
  double lambda = cfg.levenberg_lambda;
  Workspace ws;

  int accepted = 0;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    linearize(model, buf, dt, use_param, nodes, payload, ws);

    // gradient (of ½‖·‖²) and border terms are damping-independent
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m * nx, use_param ? 2 : 1);
    double g_p = 0.0;
    double h_pp = use_param ? wp : 0.0;
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd g = -ws.h_jac[i].transpose() * wr.cwiseProduct(ws.e_meas[i]);
      if (i == 0) g += wa.cwiseProduct(nodes[0] - buf.arrival_state());
      if (i > 0) g += wq.cwiseProduct(ws.e_proc[i - 1]);
      if (i + 1 < m) g -= ws.a_jac[i].transpose() * wq.cwiseProduct(ws.e_proc[i]);
      rhs.col(0).segment(i * nx, nx) = -g;
    }
    if (use_param) {
      for (int i = 0; i + 1 < m; ++i) {
        const Eigen::VectorXd wqb = wq.cwiseProduct(ws.b_jac[i]);
        h_pp += ws.b_jac[i].dot(wqb);
        g_p -= ws.b_jac[i].dot(wq.cwiseProduct(ws.e_proc[i]));
        rhs.col(1).segment(i * nx, nx) += ws.a_jac[i].transpose() * wqb;
        rhs.col(1).segment((i + 1) * nx, nx) -= wqb;
      }
      g_p += wp * (payload - buf.arrival_payload());
    }

    // Gauss-Newton blocks without damping; λ is added per retry
    std::vector<Eigen::MatrixXd> base_diag(static_cast<size_t>(m));
    std::vector<Eigen::MatrixXd> upper(static_cast<size_t>(m - 1));
    for (int i = 0; i < m; ++i) {
      Eigen::MatrixXd d = ws.h_jac[i].transpose() * wr.asDiagonal() * ws.h_jac[i];
      if (i == 0) d += wa.asDiagonal();
      if (i > 0) d += wq.asDiagonal();
      if (i + 1 < m) {
        d.noalias() += ws.a_jac[i].transpose() * wq.asDiagonal() * ws.a_jac[i];
        upper[i] = -ws.a_jac[i].transpose() * wq.asDiagonal();
      }
      base_diag[i] = std::move(d);
    }

    bool step_accepted = false;
    double step_norm = 0.0;
    for (int retry = 0; retry <= kMaxDampingRetries; ++retry) {
      std::vector<Eigen::MatrixXd> diag = base_diag;
      for (auto& d : diag) d.diagonal().array() += lambda;

      Eigen::MatrixXd sol_cols;
      try {
        sol_cols = block_tridiag_solve(diag, upper, rhs, nx);
      } catch (const NumericalError&) {
        lambda = std::max(lambda * 10.0, 1e-10);
        continue;
      }

      double delta_p = 0.0;
      Eigen::VectorXd delta_x;
      if (use_param) {
        const Eigen::VectorXd y1 = sol_cols.col(0);
        const Eigen::VectorXd y2 = sol_cols.col(1);
        const Eigen::VectorXd border = rhs.col(1);
        const double denom = (h_pp + lambda) - border.dot(y2);
        delta_p = (-g_p - border.dot(y1)) / denom;
        delta_x = y1 - y2 * delta_p;
      } else {
        delta_x = sol_cols.col(0);
      }

      if (!delta_x.allFinite() || !std::isfinite(delta_p)) {
        lambda = std::max(lambda * 10.0, 1e-10);
        continue;
      }

      std::vector<Eigen::VectorXd> cand = nodes;
      for (int i = 0; i < m; ++i) cand[i] += delta_x.segment(i * nx, nx);
      double cand_payload = clamp_payload(payload + delta_p);
      postprocess(cand);

      const double cand_obj = objective(cand, cand_payload);
      if (cand_obj <= obj * (1.0 + 1e-12) + 1e-15) {
        nodes = std::move(cand);
        payload = cand_payload;
        obj = cand_obj;
        step_norm = delta_x.lpNorm<Eigen::Infinity>();
        if (use_param) step_norm = std::max(step_norm, std::abs(delta_p));
        lambda = std::max(lambda / 3.0, cfg.levenberg_lambda);
        step_accepted = true;
        break;
      }
      lambda = std::max(lambda * 10.0, 1e-10);
    }

    if (!step_accepted) {
      sol.degraded = true;
      break;
    }
    ++accepted;
    if (step_norm < cfg.step_tol) break;
  }

  sol.nodes = std::move(nodes);
  sol.current = sol.nodes.back();
  sol.payload = payload;
  sol.objective = obj;
  sol.iterations = accepted;
  sol.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return sol;
}

MovingHorizonEstimator::MovingHorizonEstimator(EstimatorConfig cfg, NominalParams params,
                                               const ModelState& initial_state,
                                               std::optional<GpTriplet> gp)
    : cfg_(std::move(cfg)),
      model_(cfg_.kind, params),
      gp_(std::move(gp)),
      buf_(cfg_.horizon_nodes, cfg_.dt, initial_state.x,
           std::clamp(params.payload, cfg_.payload_min, cfg_.payload_max)) {
  cfg_.validate();
  cfg_.weights.validate(model_.state_dim(), model_.output_dim());
  if (initial_state.kind != cfg_.kind) {
    throw std::invalid_argument("MovingHorizonEstimator: initial state variant mismatch");
  }
  if ((cfg_.kind == ModelKind::GpAugmented) != gp_.has_value()) {
    throw std::invalid_argument(
        "MovingHorizonEstimator: GP triplet must be provided exactly when the model is GP-MHE");
  }
}

StepResult MovingHorizonEstimator::estimate_step(const MeasurementFrame& m) {
  Eigen::VectorXd y(model_.output_dim());
  Eigen::VectorXd u(model_.input_dim());
  int gp_count = 0;
  y.segment<3>(0) = m.p_meas;
  y.segment<3>(3) = m.w_meas;
  switch (cfg_.kind) {
    case ModelKind::Kinematic:
      y.segment<3>(6) = m.a_meas;
      break;
    case ModelKind::Dynamic:
      y[6] = m.thrust;
      u[0] = m.thrust;
      break;
    case ModelKind::GpAugmented: {
      // single point prediction per sample; the window reuses stored values
      const TripletPrediction pred = gp_->predict(m.a_meas);
      gp_count = 1;
      y[6] = m.thrust;
      y.segment<3>(7) = pred.mean;
      u[0] = m.thrust;
      break;
    }
  }
  return estimate_step_raw(m.t, std::move(y), std::move(u), gp_count);
}

StepResult MovingHorizonEstimator::estimate_step_raw(double t, Eigen::VectorXd y,
                                                     Eigen::VectorXd u, int gp_predictions) {
  if (y.size() != model_.output_dim()) {
    throw std::invalid_argument("estimate_step: measurement dimension does not match model");
  }
  if (u.size() != model_.input_dim()) {
    throw std::invalid_argument("estimate_step: input dimension does not match model");
  }

  const bool will_evict = buf_.full();
  if (will_evict && prev_.has_value()) {
    update_arrival(buf_, *prev_);
  }
  const bool evicted = buf_.push_frame(t, std::move(y), std::move(u));

  StepResult out;
  out.evicted = evicted;
  out.gp_predictions = gp_predictions;

  if (buf_.size() < 2) {
    out.state = buf_.arrival_state();
    out.payload = buf_.arrival_payload();
    return out;
  }

  std::vector<Eigen::VectorXd> warm;
  std::optional<double> warm_payload;
  const std::vector<Eigen::VectorXd>* warm_ptr = nullptr;
  if (prev_.has_value()) {
    warm = prev_->nodes;
    if (evicted) warm.erase(warm.begin());
    const Frame& newest = buf_.frame(buf_.size() - 1);
    warm.push_back(model_.step(warm.back(), newest.u, cfg_.dt, prev_->payload));
    warm_payload = prev_->payload;
    warm_ptr = &warm;
  }

  MheSolution sol = solve(model_, buf_, cfg_, warm_ptr, warm_payload);
  out.state = sol.current;
  out.payload = sol.payload;
  prev_ = sol;
  out.solution = std::move(sol);
  return out;
}

WeightConfig default_weights(ModelKind kind, double sigma_p, double sigma_w, double sigma_a,
                             const Vec3* gp_avg_var) {
  const int nx = state_dim(kind);
  const int ny = output_dim(kind);
  WeightConfig w;
  w.r_diag.resize(ny);
  w.r_diag.segment<3>(0).setConstant(sigma_p * sigma_p);
  w.r_diag.segment<3>(3).setConstant(sigma_w * sigma_w);
  switch (kind) {
    case ModelKind::Kinematic:
      w.r_diag.segment<3>(6).setConstant(sigma_a * sigma_a);
      break;
    case ModelKind::Dynamic:
      w.r_diag[6] = 1e-2;  // thrust channel; measured input, residual is zero
      break;
    case ModelKind::GpAugmented:
      w.r_diag[6] = 1e-2;
      for (int i = 0; i < 3; ++i) {
        const double v = gp_avg_var != nullptr ? std::max((*gp_avg_var)[i], 1e-6)
                                               : sigma_a * sigma_a;
        w.r_diag[7 + i] = v;
      }
      break;
  }

  w.q_diag.resize(nx);
  w.q_diag.segment<3>(kPosIdx).setConstant(1e-6);
  w.q_diag.segment<4>(kQuatIdx).setConstant(2.5e-5);
  w.q_diag.segment<3>(kOmegaIdx).setConstant(4e-2);
  switch (kind) {
    case ModelKind::Kinematic:
      w.q_diag.segment<3>(kVelIdx).setConstant(4e-4);
      w.q_diag.segment<3>(kExtraIdx).setConstant(2.5e-1);
      break;
    case ModelKind::Dynamic:
      w.q_diag.segment<3>(kVelIdx).setConstant(1.2e-3);
      break;
    case ModelKind::GpAugmented:
      w.q_diag.segment<3>(kVelIdx).setConstant(4e-4);
      w.q_diag.segment<3>(kExtraIdx).setConstant(2.5e-3);
      break;
  }

  w.q_arrival_diag.resize(nx);
  w.q_arrival_diag.segment<3>(kPosIdx).setConstant(2.5e-1);
  w.q_arrival_diag.segment<4>(kQuatIdx).setConstant(9e-2);
  w.q_arrival_diag.segment<3>(kVelIdx).setConstant(1.0);
  w.q_arrival_diag.segment<3>(kOmegaIdx).setConstant(1.0);
  if (nx == 16) {
    w.q_arrival_diag.segment<3>(kExtraIdx)
        .setConstant(kind == ModelKind::Kinematic ? 1.0 : 2.5e-1);
  }
  w.q_param = 1e-2;
  return w;
}

}  // namespace mhe
