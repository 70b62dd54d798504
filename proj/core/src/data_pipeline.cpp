#include "mhe/data_pipeline.hpp"

#include "mhe/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>

namespace mhe {

void FlightLog::validate() const {
  for (size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].t > rows[i - 1].t)) {
      throw std::invalid_argument("FlightLog: timestamps must be strictly increasing");
    }
  }
  if (!truth.empty() && truth.size() != rows.size()) {
    throw std::invalid_argument("FlightLog: truth trace length differs from measurement rows");
  }
}

std::string truth_path_for(const std::string& log_path) {
  const auto dot = log_path.rfind(".csv");
  if (dot == std::string::npos || dot + 4 != log_path.size()) {
    return log_path + ".truth.csv";
  }
  return log_path.substr(0, dot) + ".truth.csv";
}

namespace {

void write_value(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  out += buf;
}

void write_row(std::ofstream& os, double t, const Vec3& p, const Quaternion& q, const Vec3& v,
               const Vec3& w, const Vec3& a, double thrust, double mass, double event) {
  std::string line;
  line.reserve(320);
  const double values[20] = {t,      p.x(), p.y(), p.z(), q.w,    q.x,  q.y,
                             q.z,    v.x(), v.y(), v.z(), w.x(),  w.y(), w.z(),
                             a.x(),  a.y(), a.z(), thrust, mass,  event};
  for (int i = 0; i < 20; ++i) {
    if (i > 0) line += ',';
    write_value(line, values[i]);
  }
  line += '\n';
  os << line;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void save_flight_log(const FlightLog& log, const std::string& path) {
  log.validate();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_flight_log: cannot write " + path);
  os << kFlightLogHeader << "\n";
  for (const LogRow& r : log.rows) {
    write_row(os, r.t, r.p_meas, r.q_ref, r.v_ref, r.w_meas, r.a_meas, r.thrust, r.mass,
              r.event);
  }
  if (log.has_truth()) {
    const std::string tpath = truth_path_for(path);
    std::ofstream ts(tpath);
    if (!ts) throw std::runtime_error("save_flight_log: cannot write " + tpath);
    ts << kFlightLogHeader << "\n";
    for (const TruthRow& r : log.truth) {
      write_row(ts, r.t, r.p, r.q, r.v, r.w, r.a_body, 0.0, r.mass, r.event);
    }
  }
}

namespace {

struct ParsedCsv {
  std::map<std::string, int> columns;
  std::vector<std::vector<double>> rows;
  int dropped = 0;
};

ParsedCsv parse_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  ParsedCsv out;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cells = split_csv(line);
    if (!have_header) {
      for (size_t i = 0; i < cells.size(); ++i) {
        out.columns[cells[i]] = static_cast<int>(i);
      }
      have_header = true;
      continue;
    }
    std::vector<double> vals(cells.size());
    bool ok = cells.size() == out.columns.size();
    for (size_t i = 0; ok && i < cells.size(); ++i) {
      char* end = nullptr;
      vals[i] = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || !std::isfinite(vals[i])) ok = false;
    }
    if (ok) {
      out.rows.push_back(std::move(vals));
    } else {
      ++out.dropped;
    }
  }
  if (!have_header) throw std::runtime_error(path + ": no header line");
  return out;
}

int require_column(const ParsedCsv& csv, const std::string& name, const std::string& path) {
  const auto it = csv.columns.find(name);
  if (it == csv.columns.end()) {
    throw std::runtime_error(path + ": missing mapped column '" + name + "'");
  }
  return it->second;
}

}  // namespace

FlightLog ingest_csv(const std::string& path, const ColumnMap& map, IngestReport* report) {
  const ParsedCsv csv = parse_csv(path);

  const int c_t = require_column(csv, map.time, path);
  int c_p[3], c_q[4], c_v[3], c_w[3], c_a[3];
  for (int i = 0; i < 3; ++i) c_p[i] = require_column(csv, map.position[i], path);
  for (int i = 0; i < 4; ++i) c_q[i] = require_column(csv, map.quaternion[i], path);
  for (int i = 0; i < 3; ++i) c_v[i] = require_column(csv, map.velocity[i], path);
  for (int i = 0; i < 3; ++i) c_w[i] = require_column(csv, map.body_rate[i], path);
  for (int i = 0; i < 3; ++i) c_a[i] = require_column(csv, map.accel[i], path);
  const int c_f = require_column(csv, map.thrust, path);
  const int c_mass =
      (!map.mass.empty() && csv.columns.count(map.mass)) ? csv.columns.at(map.mass) : -1;
  const int c_event =
      (!map.event.empty() && csv.columns.count(map.event)) ? csv.columns.at(map.event) : -1;

  FlightLog log;
  log.rows.reserve(csv.rows.size());
  for (const auto& vals : csv.rows) {
    LogRow r;
    r.t = vals[c_t];
    r.p_meas = {vals[c_p[0]], vals[c_p[1]], vals[c_p[2]]};
    r.q_ref = {vals[c_q[0]], vals[c_q[1]], vals[c_q[2]], vals[c_q[3]]};
    r.v_ref = {vals[c_v[0]], vals[c_v[1]], vals[c_v[2]]};
    r.w_meas = {vals[c_w[0]], vals[c_w[1]], vals[c_w[2]]};
    r.a_meas = {vals[c_a[0]], vals[c_a[1]], vals[c_a[2]]};
    r.thrust = vals[c_f] * (map.thrust_mass_normalized ? map.vehicle_mass : 1.0);
    if (c_mass >= 0) r.mass = vals[c_mass];
    if (c_event >= 0) r.event = vals[c_event];
    log.rows.push_back(r);
  }

  if (log.size() < 2) {
    throw std::runtime_error(path + ": fewer than two valid rows");
  }
  log.validate();
  if (report != nullptr) {
    report->rows_kept = log.size();
    report->rows_dropped = csv.dropped;
  }
  return log;
}

FlightLog load_flight_log(const std::string& path) {
  FlightLog log = ingest_csv(path, ColumnMap{});

  const std::string tpath = truth_path_for(path);
  if (std::ifstream probe(tpath); probe.good()) {
    const FlightLog traw = ingest_csv(tpath, ColumnMap{});
    log.truth.reserve(traw.rows.size());
    for (const LogRow& r : traw.rows) {
      TruthRow t;
      t.t = r.t;
      t.p = r.p_meas;
      t.q = r.q_ref;
      t.v = r.v_ref;
      t.w = r.w_meas;
      t.a_body = r.a_meas;
      t.mass = r.mass;
      t.event = r.event;
      log.truth.push_back(t);
    }
    log.validate();
  }
  return log;
}

FlightLog add_position_noise(const FlightLog& log, double sigma_p, std::uint64_t seed) {
  if (!(sigma_p >= 0.0)) {
    throw std::invalid_argument("add_position_noise: sigma must be non-negative");
  }
  FlightLog out = log;
  GaussianStream g(mix_seed(seed, 7));
  for (LogRow& r : out.rows) {
    r.p_meas += sigma_p * Vec3{g.next(), g.next(), g.next()};
  }
  return out;
}

ResidualSample compute_residual(const Vec3& a_meas, const Quaternion& q_hat, double f_thrust,
                                double mass) {
  if (!(mass > 0.0)) {
    throw std::invalid_argument("compute_residual: mass must be positive");
  }
  const Quaternion q_inv = q_hat.conjugate();
  const Vec3 a_hat_body{0.0, 0.0, f_thrust / mass};
  const Vec3 a = a_meas + quat_rotate(q_inv, kGravityW);
  const Vec3 a_hat = quat_rotate(q_inv, quat_rotate(q_hat, a_hat_body) + kGravityW);
  return {a_meas, a - a_hat};
}

namespace {

double median_spacing(const FlightLog& log) {
  std::vector<double> gaps;
  gaps.reserve(log.rows.size());
  for (size_t i = 1; i < log.rows.size(); ++i) {
    gaps.push_back(log.rows[i].t - log.rows[i - 1].t);
  }
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

std::vector<Quaternion> replay_kmhe_attitude(const FlightLog& log,
                                             const TrainingBuildOptions& opts) {
  EstimatorConfig cfg;
  cfg.kind = ModelKind::Kinematic;
  cfg.horizon_nodes = opts.horizon_nodes;
  cfg.dt = median_spacing(log);
  cfg.weights = default_weights(ModelKind::Kinematic, opts.sigma_p, opts.sigma_w, opts.sigma_a);
  cfg.max_iterations = 1;

  ModelState init = ModelState::zero(ModelKind::Kinematic);
  const LogRow& r0 = log.rows.front();
  init.set_position(r0.p_meas);
  init.set_attitude(r0.q_ref.normalized());
  init.set_velocity(r0.v_ref);
  init.set_body_rates(r0.w_meas);
  init.set_extra(r0.a_meas);

  MovingHorizonEstimator est(cfg, NominalParams{opts.mass}, init);
  std::vector<Quaternion> att;
  att.reserve(log.rows.size());
  for (int i = 0; i < log.size(); ++i) {
    const StepResult res = est.estimate_step(log.frame(i));
    Quaternion q{res.state[kQuatIdx], res.state[kQuatIdx + 1], res.state[kQuatIdx + 2],
                 res.state[kQuatIdx + 3]};
    att.push_back(q.normalized());
  }
  return att;
}

}  // namespace

std::array<TrainingSet, 3> build_training_sets(const FlightLog& log,
                                               const TrainingBuildOptions& opts) {
  log.validate();
  if (log.size() < 2) {
    throw std::invalid_argument("build_training_sets: log too short");
  }
  if (opts.stride < 1) {
    throw std::invalid_argument("build_training_sets: stride must be ≥ 1");
  }

  std::vector<Quaternion> att;
  if (opts.attitude == AttitudeSource::KMheEstimate) {
    att = replay_kmhe_attitude(log, opts);
  } else {
    att.reserve(log.rows.size());
    for (const LogRow& r : log.rows) {
      if (r.q_ref.norm() < 0.5) {
        throw std::invalid_argument("build_training_sets: log has no usable attitude source");
      }
      att.push_back(r.q_ref.normalized());
    }
  }

  const int n_out = (log.size() + opts.stride - 1) / opts.stride;
  std::array<TrainingSet, 3> sets;
  for (auto& s : sets) {
    s.inputs.resize(n_out);
    s.targets.resize(n_out);
  }
  int k = 0;
  for (int i = 0; i < log.size(); i += opts.stride, ++k) {
    const LogRow& r = log.rows[static_cast<size_t>(i)];
    const ResidualSample rs = compute_residual(r.a_meas, att[static_cast<size_t>(i)],
                                               r.thrust, opts.mass);
    for (int axis = 0; axis < 3; ++axis) {
      sets[axis].inputs[k] = rs.input[axis];
      sets[axis].targets[k] = rs.target[axis];
    }
  }
  return sets;
}

namespace {

TrainingSet subsample(const TrainingSet& ts, int max_points) {
  if (max_points <= 0 || ts.size() <= max_points) return ts;
  const int stride = (ts.size() + max_points - 1) / max_points;
  const int n = (ts.size() + stride - 1) / stride;
  TrainingSet out;
  out.inputs.resize(n);
  out.targets.resize(n);
  for (int i = 0, k = 0; i < ts.size(); i += stride, ++k) {
    out.inputs[k] = ts.inputs[i];
    out.targets[k] = ts.targets[i];
  }
  return out;
}

SparseGp fit_axis(const TrainingSet& full, const TrainTripletOptions& opts) {
  const TrainingSet ts = subsample(full, opts.max_fit_points);
  const double z_mean = ts.inputs.mean();
  const double z_std =
      std::sqrt((ts.inputs.array() - z_mean).square().sum() / std::max(1, ts.size() - 1));
  const double c_var = ts.targets.squaredNorm() / std::max(1, ts.size());

  RbfHyperparams init;
  init.length_scale = std::max(0.3, z_std);
  init.signal_var = std::max(c_var, 1e-4);
  init.noise_var = std::max(0.1 * c_var, 1e-6);

  const DenseGp dense = fit_dense(ts, init, opts.fit);
  return sparsify(dense, std::min(opts.inducing_points, ts.size()));
}

}  // namespace

GpTriplet train_triplet(const FlightLog& log, const TrainTripletOptions& opts) {
  const std::array<TrainingSet, 3> sets = build_training_sets(log, opts.build);
  GpTriplet out;
  if (opts.parallel_axes) {
    std::future<SparseGp> jobs[3];
    for (int i = 0; i < 3; ++i) {
      jobs[i] = std::async(std::launch::async,
                           [&sets, &opts, i] { return fit_axis(sets[i], opts); });
    }
    for (int i = 0; i < 3; ++i) out.axis[i] = jobs[i].get();
  } else {
    for (int i = 0; i < 3; ++i) out.axis[i] = fit_axis(sets[i], opts);
  }
  return out;
}

}  // namespace mhe
