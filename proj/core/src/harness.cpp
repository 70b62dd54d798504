#include "mhe/harness.hpp"

#include "mhe/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

namespace mhe {

namespace {

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

double median_spacing(const FlightLog& log) {
  std::vector<double> gaps;
  gaps.reserve(log.rows.size());
  for (size_t i = 1; i < log.rows.size(); ++i) {
    gaps.push_back(log.rows[i].t - log.rows[i - 1].t);
  }
  return median_of(std::move(gaps));
}

const char* estimator_color(ModelKind kind) {
  switch (kind) {
    case ModelKind::Kinematic:
      return "#1f77b4";
    case ModelKind::Dynamic:
      return "#d62728";
    case ModelKind::GpAugmented:
      return "#2ca02c";
  }
  return "#000000";
}

}  // namespace

StateTrace truth_trace(const FlightLog& log) {
  if (!log.has_truth()) {
    throw std::invalid_argument("truth_trace: log carries no ground truth");
  }
  StateTrace out;
  out.t.reserve(log.truth.size());
  out.p.reserve(log.truth.size());
  out.q.reserve(log.truth.size());
  out.v.reserve(log.truth.size());
  for (const TruthRow& r : log.truth) {
    out.t.push_back(r.t);
    out.p.push_back(r.p);
    out.q.push_back(r.q);
    out.v.push_back(r.v);
  }
  return out;
}

RmseResult rmse(const StateTrace& estimates, const StateTrace& truth, double warmup_s) {
  if (estimates.size() != truth.size() || estimates.size() == 0) {
    throw std::invalid_argument("rmse: traces are misaligned");
  }
  const double t_min = truth.t.front() + warmup_s;
  double sp = 0.0, sq = 0.0, sv = 0.0;
  int n = 0;
  for (int i = 0; i < truth.size(); ++i) {
    if (std::abs(estimates.t[i] - truth.t[i]) > 1e-9) {
      throw std::invalid_argument("rmse: timestamps differ between traces");
    }
    if (truth.t[i] < t_min - 1e-12) continue;
    sp += (estimates.p[i] - truth.p[i]).squaredNorm();
    sv += (estimates.v[i] - truth.v[i]).squaredNorm();
    const double e = attitude_error_deg(estimates.q[i], truth.q[i]);
    sq += e * e;
    ++n;
  }
  if (n == 0) {
    throw std::invalid_argument("rmse: warm-up excludes every sample");
  }
  return {std::sqrt(sp / n), std::sqrt(sq / n), std::sqrt(sv / n)};
}

ReplayResult replay_estimator(const FlightLog& log, EstimatorConfig cfg,
                              const NominalParams& params,
                              const std::optional<GpTriplet>& gp) {
  log.validate();
  if (log.size() < 2) {
    throw std::invalid_argument("replay_estimator: log is too short");
  }
  cfg.dt = median_spacing(log);

  const LogRow& r0 = log.rows.front();
  ModelState init = ModelState::zero(cfg.kind);
  init.set_position(r0.p_meas);
  if (r0.q_ref.norm() > 0.5) init.set_attitude(r0.q_ref.normalized());
  init.set_velocity(r0.v_ref);
  init.set_body_rates(r0.w_meas);
  if (cfg.kind == ModelKind::Kinematic) {
    init.set_extra(r0.a_meas);
  } else if (cfg.kind == ModelKind::GpAugmented && gp.has_value()) {
    init.set_extra(gp->predict(r0.a_meas).mean);
  }

  MovingHorizonEstimator est(cfg, params, init, gp);
  ReplayResult out;
  const size_t n = log.rows.size();
  out.trace.t.reserve(n);
  out.trace.p.reserve(n);
  out.trace.q.reserve(n);
  out.trace.v.reserve(n);
  out.states.reserve(n);
  out.solve_ms.reserve(n);
  if (cfg.estimate_payload) out.mass.reserve(n);

  for (int i = 0; i < log.size(); ++i) {
    const StepResult r = est.estimate_step(log.frame(i));
    out.trace.t.push_back(log.rows[static_cast<size_t>(i)].t);
    out.trace.p.push_back(r.state.segment<3>(kPosIdx));
    out.trace.q.push_back(
        Quaternion{r.state[kQuatIdx], r.state[kQuatIdx + 1], r.state[kQuatIdx + 2],
                   r.state[kQuatIdx + 3]});
    out.trace.v.push_back(r.state.segment<3>(kVelIdx));
    out.states.push_back(r.state);
    out.solve_ms.push_back(r.solution.solve_time_s * 1e3);
    if (cfg.estimate_payload) out.mass.push_back(r.payload);
  }
  return out;
}

void WeightOverrides::apply(WeightConfig& w, ModelKind kind) const {
  auto set_block = [](Eigen::VectorXd& d, int off, int len, const std::optional<double>& v) {
    if (v.has_value()) d.segment(off, len).setConstant(*v);
  };
  set_block(w.q_diag, kPosIdx, 3, q_pos);
  set_block(w.q_diag, kQuatIdx, 4, q_att);
  set_block(w.q_diag, kVelIdx, 3, q_vel);
  set_block(w.q_diag, kOmegaIdx, 3, q_rate);
  set_block(w.q_arrival_diag, kPosIdx, 3, a_pos);
  set_block(w.q_arrival_diag, kQuatIdx, 4, a_att);
  set_block(w.q_arrival_diag, kVelIdx, 3, a_vel);
  set_block(w.q_arrival_diag, kOmegaIdx, 3, a_rate);
  if (state_dim(kind) == 16) {
    set_block(w.q_diag, kExtraIdx, 3, q_extra);
    set_block(w.q_arrival_diag, kExtraIdx, 3, a_extra);
  }
  if (r_thrust.has_value() && kind != ModelKind::Kinematic) w.r_diag[6] = *r_thrust;
  if (r_gp.has_value() && kind == ModelKind::GpAugmented) {
    w.r_diag.segment<3>(7) = *r_gp;
  }
  if (q_param.has_value()) w.q_param = *q_param;
}

void ExperimentSpec::validate() const {
  if (estimators.empty()) throw std::invalid_argument("ExperimentSpec: no estimators");
  if (seeds.empty()) throw std::invalid_argument("ExperimentSpec: need at least one seed");
  if (horizon_nodes < 2) throw std::invalid_argument("ExperimentSpec: need N ≥ 2");
  if (warmup_s < 0.0) throw std::invalid_argument("ExperimentSpec: warm-up must be ≥ 0");
}

SimConfig sim_config(const ExperimentSpec& spec, std::uint64_t seed, bool with_payload) {
  SimConfig sim;
  sim.trajectory = spec.trajectory;
  sim.timing = spec.timing;
  sim.base_mass = spec.base_mass;
  sim.disturbance = spec.disturbance;
  sim.sensors = spec.sensors;
  sim.sensors.seed = seed;
  sim.gains = spec.gains;
  sim.attitude_tau_s = spec.attitude_tau_s;
  if (with_payload) {
    sim.payload = PayloadSchedule::pick_and_place(spec.trajectory, spec.timing,
                                                  spec.payload_delta, spec.payload_dwell_s);
  }
  return sim;
}

EstimatorConfig estimator_config(const ExperimentSpec& spec, ModelKind kind,
                                 const GpTriplet* gp) {
  EstimatorConfig cfg;
  cfg.kind = kind;
  cfg.horizon_nodes = spec.horizon_nodes;
  cfg.dt = 1.0 / spec.sensors.rate_hz;
  Vec3 gp_var;
  const Vec3* gp_var_ptr = nullptr;
  if (kind == ModelKind::GpAugmented && gp != nullptr) {
    gp_var = gp->avg_train_var();
    gp_var_ptr = &gp_var;
  }
  cfg.weights = default_weights(kind, spec.sensors.sigma_p, spec.sensors.sigma_w,
                                spec.sensors.sigma_a, gp_var_ptr);
  spec.weight_overrides[static_cast<size_t>(kind)].apply(cfg.weights, kind);
  cfg.max_iterations = spec.max_iterations;
  cfg.estimate_payload = spec.estimate_payload && kind != ModelKind::Kinematic;
  return cfg;
}

GpTriplet train_gp_for_spec(const ExperimentSpec& spec) {
  const FlightLog log = run_flight(sim_config(spec, spec.train_seed, false));
  TrainTripletOptions opts = spec.gp_train;
  opts.build.mass = spec.base_mass;
  opts.build.sigma_p = spec.sensors.sigma_p;
  opts.build.sigma_w = spec.sensors.sigma_w;
  opts.build.sigma_a = spec.sensors.sigma_a;
  opts.build.horizon_nodes = spec.horizon_nodes;
  return train_triplet(log, opts);
}

namespace {

struct Repetition {
  FlightLog log;
  std::vector<RmseResult> errors;
  std::vector<ReplayResult> traces;
};

}  // namespace

MetricsReport run_comparison(const ExperimentSpec& spec) {
  spec.validate();
  const bool needs_gp =
      std::any_of(spec.estimators.begin(), spec.estimators.end(),
                  [](ModelKind k) { return k == ModelKind::GpAugmented; });
  std::optional<GpTriplet> gp;
  if (needs_gp) {
    gp = spec.pretrained_gp.has_value() ? *spec.pretrained_gp : train_gp_for_spec(spec);
  }

  auto run_repetition = [&spec, &gp](std::uint64_t seed) {
    Repetition rep;
    rep.log = run_flight(sim_config(spec, seed, spec.payload_schedule));
    const StateTrace truth = truth_trace(rep.log);
    for (ModelKind kind : spec.estimators) {
      const std::optional<GpTriplet>& kind_gp =
          kind == ModelKind::GpAugmented ? gp : std::optional<GpTriplet>{};
      const EstimatorConfig cfg =
          estimator_config(spec, kind, kind_gp.has_value() ? &*kind_gp : nullptr);
      NominalParams params;
      params.mass = spec.base_mass;
      ReplayResult rr = replay_estimator(rep.log, cfg, params, kind_gp);
      rep.errors.push_back(rmse(rr.trace, truth, spec.warmup_s));
      rep.traces.push_back(std::move(rr));
    }
    return rep;
  };

  std::vector<Repetition> reps(spec.seeds.size());
  if (spec.parallel_repetitions && spec.seeds.size() > 1) {
    std::vector<std::future<Repetition>> jobs;
    jobs.reserve(spec.seeds.size());
    for (std::uint64_t seed : spec.seeds) {
      jobs.push_back(std::async(std::launch::async, run_repetition, seed));
    }
    for (size_t i = 0; i < jobs.size(); ++i) reps[i] = jobs[i].get();
  } else {
    for (size_t i = 0; i < spec.seeds.size(); ++i) reps[i] = run_repetition(spec.seeds[i]);
  }

  MetricsReport report;
  report.warmup_s = spec.warmup_s;
  report.has_payload_traces = spec.estimate_payload;
  const int fill = spec.horizon_nodes + 1;  // skip partial-window solves in timing stats
  for (size_t e = 0; e < spec.estimators.size(); ++e) {
    EstimatorMetrics m;
    m.kind = spec.estimators[e];
    std::vector<double> all_ms;
    for (const Repetition& rep : reps) {
      m.p_rmse += rep.errors[e].p;
      m.q_rmse_deg += rep.errors[e].q_deg;
      m.v_rmse += rep.errors[e].v;
      const auto& ms = rep.traces[e].solve_ms;
      for (size_t i = static_cast<size_t>(fill); i < ms.size(); ++i) all_ms.push_back(ms[i]);
    }
    const double nr = static_cast<double>(reps.size());
    m.p_rmse /= nr;
    m.q_rmse_deg /= nr;
    m.v_rmse /= nr;
    if (!all_ms.empty()) {
      m.solve_ms_mean = std::accumulate(all_ms.begin(), all_ms.end(), 0.0) /
                        static_cast<double>(all_ms.size());
      m.solve_ms_median = median_of(std::move(all_ms));
    }
    report.estimators.push_back(m);
  }
  report.last_log = std::move(reps.back().log);
  report.last_traces = std::move(reps.back().traces);
  return report;
}

std::vector<SweepPoint> sweep_horizon(ExperimentSpec spec, const std::vector<int>& n_list) {
  if (n_list.size() < 2) {
    throw std::invalid_argument("sweep_horizon: need at least two horizon lengths");
  }
  const bool needs_gp =
      std::any_of(spec.estimators.begin(), spec.estimators.end(),
                  [](ModelKind k) { return k == ModelKind::GpAugmented; });
  if (needs_gp && !spec.pretrained_gp.has_value()) {
    spec.pretrained_gp = train_gp_for_spec(spec);
  }
  std::vector<SweepPoint> out;
  out.reserve(n_list.size());
  for (int n : n_list) {
    spec.horizon_nodes = n;
    const MetricsReport rep = run_comparison(spec);
    out.push_back({n, rep.estimators});
  }
  return out;
}

MetricsReport run_payload_study(ExperimentSpec spec) {
  spec.trajectory = TrajectoryKind::SlantedCircle;
  spec.payload_schedule = true;
  spec.estimate_payload = true;
  return run_comparison(spec);
}

namespace {

void emit_estimator_trace(const std::string& path, const ReplayResult& rr,
                          const StateTrace& truth, const std::vector<double>& true_mass) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("emit_outputs: cannot write " + path);
  os << "t,est_px,est_py,est_pz,est_qw,est_qx,est_qy,est_qz,est_vx,est_vy,est_vz,est_mp,"
        "true_px,true_py,true_pz,true_qw,true_qx,true_qy,true_qz,true_vx,true_vy,true_vz,"
        "true_mass,att_err_deg\n";
  for (int i = 0; i < truth.size(); ++i) {
    const Quaternion& qe = rr.trace.q[i];
    const Quaternion& qt = truth.q[i];
    std::string line;
    auto add = [&line](double v, bool first = false) {
      if (!first) line += ',';
      line += csv_num(v);
    };
    add(truth.t[i], true);
    add(rr.trace.p[i].x());
    add(rr.trace.p[i].y());
    add(rr.trace.p[i].z());
    add(qe.w);
    add(qe.x);
    add(qe.y);
    add(qe.z);
    add(rr.trace.v[i].x());
    add(rr.trace.v[i].y());
    add(rr.trace.v[i].z());
    add(rr.mass.empty() ? 0.0 : rr.mass[static_cast<size_t>(i)]);
    add(truth.p[i].x());
    add(truth.p[i].y());
    add(truth.p[i].z());
    add(qt.w);
    add(qt.x);
    add(qt.y);
    add(qt.z);
    add(truth.v[i].x());
    add(truth.v[i].y());
    add(truth.v[i].z());
    add(true_mass[static_cast<size_t>(i)]);
    add(attitude_error_deg(qe, qt));
    line += '\n';
    os << line;
  }
}

std::vector<double> component(const std::vector<Vec3>& v, int c) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i][c];
  return out;
}

}  // namespace

void emit_outputs(const MetricsReport& report, const std::string& out_dir,
                  const EmitOptions& opts) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("emit_outputs: cannot create directory " + out_dir + ": " +
                             ec.message());
  }

  {
    const std::string path = out_dir + "/metrics.csv";
    std::ofstream os(path);
    if (!os) throw std::runtime_error("emit_outputs: cannot write " + path);
    os << "estimator,metric,value\n";
    for (const EstimatorMetrics& m : report.estimators) {
      os << model_name(m.kind) << ",p_rmse_m," << csv_num(m.p_rmse) << "\n";
      os << model_name(m.kind) << ",q_rmse_deg," << csv_num(m.q_rmse_deg) << "\n";
      os << model_name(m.kind) << ",v_rmse_mps," << csv_num(m.v_rmse) << "\n";
    }
  }

  if (opts.timing) {
    std::ofstream os(out_dir + "/timing.csv");
    os << "estimator,solve_ms_mean,solve_ms_median\n";
    for (const EstimatorMetrics& m : report.estimators) {
      os << model_name(m.kind) << "," << csv_num(m.solve_ms_mean) << ","
         << csv_num(m.solve_ms_median) << "\n";
    }
  }

  if (report.last_traces.empty() || !report.last_log.has_truth()) return;
  const StateTrace truth = truth_trace(report.last_log);
  std::vector<double> true_mass(report.last_log.truth.size());
  for (size_t i = 0; i < true_mass.size(); ++i) true_mass[i] = report.last_log.truth[i].mass;

  std::vector<SvgSeries> mass_series;
  for (size_t e = 0; e < report.estimators.size(); ++e) {
    const ModelKind kind = report.estimators[e].kind;
    const ReplayResult& rr = report.last_traces[e];
    const std::string name = model_name(kind);
    emit_estimator_trace(out_dir + "/trace_" + name + ".csv", rr, truth, true_mass);

    const char* comp_names[3] = {"x", "y", "z"};
    std::vector<SvgSeries> pos, vel;
    for (int c = 0; c < 3; ++c) {
      pos.push_back({std::string("true ") + comp_names[c], "#999999", truth.t,
                     component(truth.p, c)});
      pos.push_back({std::string("est ") + comp_names[c], estimator_color(kind), truth.t,
                     component(rr.trace.p, c)});
      vel.push_back({std::string("true ") + comp_names[c], "#999999", truth.t,
                     component(truth.v, c)});
      vel.push_back({std::string("est ") + comp_names[c], estimator_color(kind), truth.t,
                     component(rr.trace.v, c)});
    }
    write_svg_plot(out_dir + "/plot_" + name + "_position.svg", name + " position", "t [s]",
                   "p [m]", pos);
    write_svg_plot(out_dir + "/plot_" + name + "_velocity.svg", name + " velocity", "t [s]",
                   "v [m/s]", vel);

    std::vector<double> aerr(truth.t.size());
    for (size_t i = 0; i < aerr.size(); ++i) {
      aerr[i] = attitude_error_deg(rr.trace.q[i], truth.q[i]);
    }
    write_svg_plot(out_dir + "/plot_" + name + "_attitude_error.svg",
                   name + " attitude error", "t [s]", "error [deg]",
                   {{name, estimator_color(kind), truth.t, aerr}});

    if (!rr.mass.empty()) {
      mass_series.push_back({name, estimator_color(kind), truth.t, rr.mass});
    }
  }

  if (report.has_payload_traces && !mass_series.empty()) {
    std::vector<double> payload_truth(true_mass.size());
    for (size_t i = 0; i < true_mass.size(); ++i) {
      payload_truth[i] = true_mass[i] - true_mass[0];
    }
    mass_series.insert(mass_series.begin(),
                       {"true payload", "#999999", truth.t, payload_truth});
    write_svg_plot(out_dir + "/plot_mass.svg", "payload mass estimate", "t [s]", "m_p [kg]",
                   mass_series);
  }
}

void emit_sweep(const std::vector<SweepPoint>& sweep, const std::string& out_dir,
                const EmitOptions& opts) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("emit_sweep: cannot create directory " + out_dir + ": " +
                             ec.message());
  }

  {
    std::ofstream os(out_dir + "/sweep.csv");
    if (!os) throw std::runtime_error("emit_sweep: cannot write sweep.csv");
    os << "estimator,nodes,p_rmse_m,q_rmse_deg,v_rmse_mps\n";
    for (const SweepPoint& pt : sweep) {
      for (const EstimatorMetrics& m : pt.estimators) {
        os << model_name(m.kind) << "," << pt.nodes << "," << csv_num(m.p_rmse) << ","
           << csv_num(m.q_rmse_deg) << "," << csv_num(m.v_rmse) << "\n";
      }
    }
  }
  if (opts.timing) {
    std::ofstream os(out_dir + "/sweep_timing.csv");
    os << "estimator,nodes,solve_ms_median,solve_ms_mean\n";
    for (const SweepPoint& pt : sweep) {
      for (const EstimatorMetrics& m : pt.estimators) {
        os << model_name(m.kind) << "," << pt.nodes << "," << csv_num(m.solve_ms_median)
           << "," << csv_num(m.solve_ms_mean) << "\n";
      }
    }
  }

  if (!sweep.empty()) {
    std::vector<SvgSeries> q_series, v_series;
    for (size_t e = 0; e < sweep.front().estimators.size(); ++e) {
      SvgSeries qs{std::string(model_name(sweep.front().estimators[e].kind)) + " q",
                   estimator_color(sweep.front().estimators[e].kind),
                   {},
                   {}};
      SvgSeries vs = qs;
      vs.label = std::string(model_name(sweep.front().estimators[e].kind)) + " v";
      for (const SweepPoint& pt : sweep) {
        qs.x.push_back(pt.nodes);
        qs.y.push_back(pt.estimators[e].q_rmse_deg);
        vs.x.push_back(pt.nodes);
        vs.y.push_back(pt.estimators[e].v_rmse);
      }
      q_series.push_back(std::move(qs));
      v_series.push_back(std::move(vs));
    }
    write_svg_plot(out_dir + "/plot_sweep_q_rmse.svg", "attitude RMSE vs horizon", "nodes",
                   "q RMSE [deg]", q_series);
    write_svg_plot(out_dir + "/plot_sweep_v_rmse.svg", "velocity RMSE vs horizon", "nodes",
                   "v RMSE [m/s]", v_series);
  }
}

ExperimentSpec spec_from_config(const Config& c) {
  ExperimentSpec s;
  s.trajectory = trajectory_from_name(c.get_string("experiment.trajectory", "lemniscate"));
  const int level = c.get_int("experiment.noise_level", 3);
  s.sensors = sensors_for_level(level, 1);
  s.sensors.sigma_p = c.get_double("noise.sigma_p", s.sensors.sigma_p);
  s.sensors.sigma_w = c.get_double("noise.sigma_w", s.sensors.sigma_w);
  s.sensors.sigma_a = c.get_double("noise.sigma_a", s.sensors.sigma_a);
  s.sensors.rate_hz = c.get_double("sim.rate_hz", 100.0);

  s.estimators.clear();
  {
    std::string list = c.get_string("experiment.estimators", "k,d,gp");
    for (char& ch : list) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream is(list);
    std::string name;
    while (is >> name) s.estimators.push_back(model_from_name(name));
  }

  s.horizon_nodes = c.get_int("estimator.nodes", 50);
  s.max_iterations = c.get_int("estimator.max_iterations", 1);
  s.warmup_s = c.get_double("experiment.warmup_s", 1.0);
  s.train_seed = c.get_u64("experiment.train_seed", 9001);
  s.parallel_repetitions = c.get_bool("experiment.parallel", true);
  if (c.has("experiment.seeds")) {
    s.seeds.clear();
    for (double v : c.get_list("experiment.seeds")) {
      s.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }

  s.timing.ramp_s = c.get_double("sim.ramp_s", 8.0);
  s.timing.cruise_s = c.get_double("sim.cruise_s", 8.0);
  s.base_mass = c.get_double("sim.base_mass", 1.0);
  s.disturbance.linear = c.get_vec3("sim.drag_linear", s.disturbance.linear);
  s.disturbance.quadratic = c.get_vec3("sim.drag_quadratic", s.disturbance.quadratic);
  s.gains.kp = c.get_double("sim.kp", s.gains.kp);
  s.gains.kd = c.get_double("sim.kd", s.gains.kd);
  s.gains.k_att = c.get_double("sim.k_att", s.gains.k_att);
  s.gains.f_max = c.get_double("sim.f_max", s.gains.f_max);
  s.attitude_tau_s = c.get_double("sim.attitude_tau_s", 0.05);

  s.payload_delta = c.get_double("experiment.payload_delta", 0.3);
  s.payload_dwell_s = c.get_double("experiment.payload_dwell_s", 6.0);

  s.gp_train.max_fit_points = c.get_int("gp.max_fit_points", 400);
  s.gp_train.inducing_points = c.get_int("gp.inducing_points", 50);
  s.gp_train.build.stride = c.get_int("gp.stride", 1);
  s.gp_train.fit.max_iterations = c.get_int("gp.fit_iterations", 200);
  s.gp_train.build.attitude = c.get_string("gp.attitude_source", "kmhe") == "truth"
                                  ? AttitudeSource::LogAttitude
                                  : AttitudeSource::KMheEstimate;

  const char* names[3] = {"k", "d", "gp"};
  for (int k = 0; k < 3; ++k) {
    WeightOverrides& wo = s.weight_overrides[static_cast<size_t>(k)];
    const std::string base = std::string("weights.") + names[k] + ".";
    auto opt = [&c, &base](const char* key) -> std::optional<double> {
      const std::string full = base + key;
      if (!c.has(full)) return std::nullopt;
      return c.get_double(full, 0.0);
    };
    wo.q_pos = opt("q_pos");
    wo.q_att = opt("q_att");
    wo.q_vel = opt("q_vel");
    wo.q_rate = opt("q_rate");
    wo.q_extra = opt("q_extra");
    wo.a_pos = opt("a_pos");
    wo.a_att = opt("a_att");
    wo.a_vel = opt("a_vel");
    wo.a_rate = opt("a_rate");
    wo.a_extra = opt("a_extra");
    wo.r_thrust = opt("r_thrust");
    wo.q_param = opt("q_param");
    if (c.has(base + "r_gp")) {
      wo.r_gp = c.get_vec3(base + "r_gp", Vec3::Zero());
    }
  }
  return s;
}

}  // namespace mhe
