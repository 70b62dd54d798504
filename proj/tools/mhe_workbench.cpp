// Command-line workbench: simulate flights, train residual GPs, replay
// estimators over logs, and run the comparison/sweep/payload studies.

#include "mhe/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using mhe::ExperimentSpec;

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool seed_set = false;
  int noise_level = 0;  // 0 = take from config
  std::string trajectory;
  std::string estimators;
  int nodes = 0;
  std::string seeds_list;
  bool timing = false;
};

ExperimentSpec build_spec(const CliOptions& cli) {
  mhe::Config cfg;
  if (!cli.config_path.empty()) cfg = mhe::Config::from_file(cli.config_path);
  ExperimentSpec spec = mhe::spec_from_config(cfg);

  if (cli.noise_level != 0) {
    mhe::SensorConfig s = mhe::sensors_for_level(cli.noise_level, 1);
    s.rate_hz = spec.sensors.rate_hz;
    spec.sensors = s;
  }
  if (!cli.trajectory.empty()) spec.trajectory = mhe::trajectory_from_name(cli.trajectory);
  if (!cli.estimators.empty()) {
    spec.estimators.clear();
    std::string list = cli.estimators;
    for (char& c : list) {
      if (c == ',') c = ' ';
    }
    std::istringstream is(list);
    std::string name;
    while (is >> name) spec.estimators.push_back(mhe::model_from_name(name));
  }
  if (cli.nodes != 0) spec.horizon_nodes = cli.nodes;
  if (!cli.seeds_list.empty()) {
    spec.seeds.clear();
    std::string list = cli.seeds_list;
    for (char& c : list) {
      if (c == ',') c = ' ';
    }
    std::istringstream is(list);
    std::uint64_t s = 0;
    while (is >> s) spec.seeds.push_back(s);
  } else if (cli.seed_set) {
    spec.seeds = {cli.seed};
  }
  return spec;
}

void print_metrics(const mhe::MetricsReport& report) {
  for (const mhe::EstimatorMetrics& m : report.estimators) {
    std::printf("%-7s p_rmse=%.4f m  q_rmse=%.4f deg  v_rmse=%.4f m/s\n",
                mhe::model_name(m.kind), m.p_rmse, m.q_rmse_deg, m.v_rmse);
  }
}

void write_estimate_csv(const mhe::ReplayResult& rr, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,m_p\n";
  char buf[64];
  for (int i = 0; i < rr.trace.size(); ++i) {
    const auto& p = rr.trace.p[static_cast<size_t>(i)];
    const auto& q = rr.trace.q[static_cast<size_t>(i)];
    const auto& v = rr.trace.v[static_cast<size_t>(i)];
    const double mp = rr.mass.empty() ? 0.0 : rr.mass[static_cast<size_t>(i)];
    const double vals[12] = {rr.trace.t[static_cast<size_t>(i)],
                             p.x(),
                             p.y(),
                             p.z(),
                             q.w,
                             q.x,
                             q.y,
                             q.z,
                             v.x(),
                             v.y(),
                             v.z(),
                             mp};
    std::string line;
    for (int c = 0; c < 12; ++c) {
      if (c > 0) line += ',';
      std::snprintf(buf, sizeof buf, "%.9g", vals[c]);
      line += buf;
    }
    os << line << "\n";
  }
}

int cmd_simulate(const CliOptions& cli, bool with_payload) {
  const ExperimentSpec spec = build_spec(cli);
  const std::uint64_t seed = cli.seed_set ? cli.seed : spec.seeds.front();
  const mhe::FlightLog log =
      mhe::run_flight(mhe::sim_config(spec, seed, with_payload || spec.payload_schedule));
  std::filesystem::create_directories(cli.out_dir);
  const std::string path = cli.out_dir + "/flight.csv";
  mhe::save_flight_log(log, path);
  std::printf("wrote %s (%d rows, %.1f s, trajectory=%s, seed=%llu)\n", path.c_str(),
              log.size(), log.rows.back().t, mhe::trajectory_name(spec.trajectory),
              static_cast<unsigned long long>(seed));
  return 0;
}

int cmd_train_gp(const CliOptions& cli, const std::string& log_path,
                 const std::string& attitude, int stride, int inducing) {
  const ExperimentSpec spec = build_spec(cli);
  const mhe::FlightLog log = mhe::load_flight_log(log_path);

  mhe::TrainTripletOptions opts = spec.gp_train;
  opts.build.mass = spec.base_mass;
  opts.build.sigma_p = spec.sensors.sigma_p;
  opts.build.sigma_w = spec.sensors.sigma_w;
  opts.build.sigma_a = spec.sensors.sigma_a;
  opts.build.horizon_nodes = spec.horizon_nodes;
  if (stride > 0) opts.build.stride = stride;
  if (inducing > 0) opts.inducing_points = inducing;
  if (attitude == "truth") {
    opts.build.attitude = mhe::AttitudeSource::LogAttitude;
  } else if (attitude == "kmhe") {
    opts.build.attitude = mhe::AttitudeSource::KMheEstimate;
  } else if (!attitude.empty()) {
    throw std::runtime_error("unknown attitude source '" + attitude +
                             "' (expected kmhe or truth)");
  }

  const mhe::GpTriplet gp = mhe::train_triplet(log, opts);
  std::filesystem::create_directories(cli.out_dir);
  const std::string path = cli.out_dir + "/gp_model.json";
  gp.save(path);
  const mhe::Vec3 var = gp.avg_train_var();
  std::printf("wrote %s (inducing=%d, avg predictive var = %.3g %.3g %.3g)\n", path.c_str(),
              static_cast<int>(gp.axis[0].inducing_inputs().size()), var.x(), var.y(),
              var.z());
  return 0;
}

int cmd_estimate(const CliOptions& cli, const std::string& log_path,
                 const std::string& estimator, const std::string& gp_model_path,
                 bool payload_est) {
  ExperimentSpec spec = build_spec(cli);
  spec.estimate_payload = payload_est;
  const mhe::ModelKind kind = mhe::model_from_name(estimator);
  const mhe::FlightLog log = mhe::load_flight_log(log_path);

  std::optional<mhe::GpTriplet> gp;
  if (kind == mhe::ModelKind::GpAugmented) {
    if (gp_model_path.empty()) {
      throw std::runtime_error("gp estimator requires --gp-model <file>");
    }
    gp = mhe::GpTriplet::load(gp_model_path);
  }

  const mhe::EstimatorConfig cfg =
      mhe::estimator_config(spec, kind, gp.has_value() ? &*gp : nullptr);
  mhe::NominalParams params;
  params.mass = spec.base_mass;
  const mhe::ReplayResult rr = mhe::replay_estimator(log, cfg, params, gp);

  std::filesystem::create_directories(cli.out_dir);
  if (log.has_truth()) {
    mhe::MetricsReport report;
    report.warmup_s = spec.warmup_s;
    report.has_payload_traces = payload_est && kind != mhe::ModelKind::Kinematic;
    mhe::EstimatorMetrics m;
    m.kind = kind;
    const mhe::RmseResult err = mhe::rmse(rr.trace, mhe::truth_trace(log), spec.warmup_s);
    m.p_rmse = err.p;
    m.q_rmse_deg = err.q_deg;
    m.v_rmse = err.v;
    report.estimators.push_back(m);
    report.last_log = log;
    report.last_traces.push_back(rr);
    mhe::emit_outputs(report, cli.out_dir, {cli.timing});
    print_metrics(report);
  } else {
    write_estimate_csv(rr, cli.out_dir + "/trace_" + std::string(mhe::model_name(kind)) +
                               ".csv");
    std::printf("wrote %s/trace_%s.csv (no ground truth in log; metrics skipped)\n",
                cli.out_dir.c_str(), mhe::model_name(kind));
  }
  return 0;
}

int cmd_compare(const CliOptions& cli) {
  const ExperimentSpec spec = build_spec(cli);
  const mhe::MetricsReport report = mhe::run_comparison(spec);
  mhe::emit_outputs(report, cli.out_dir, {cli.timing});
  print_metrics(report);
  return 0;
}

int cmd_sweep(const CliOptions& cli, const std::string& nodes_list) {
  const ExperimentSpec spec = build_spec(cli);
  std::vector<int> ns;
  std::string list = nodes_list;
  for (char& c : list) {
    if (c == ',') c = ' ';
  }
  std::istringstream is(list);
  int n = 0;
  while (is >> n) ns.push_back(n);
  const std::vector<mhe::SweepPoint> sweep = mhe::sweep_horizon(spec, ns);
  mhe::emit_sweep(sweep, cli.out_dir, {cli.timing});
  for (const mhe::SweepPoint& pt : sweep) {
    for (const mhe::EstimatorMetrics& m : pt.estimators) {
      std::printf("N=%-3d %-7s q_rmse=%.4f deg  v_rmse=%.4f m/s  median=%.2f ms\n", pt.nodes,
                  mhe::model_name(m.kind), m.q_rmse_deg, m.v_rmse, m.solve_ms_median);
    }
  }
  return 0;
}

int cmd_payload(const CliOptions& cli) {
  const ExperimentSpec spec = build_spec(cli);
  const mhe::MetricsReport report = mhe::run_payload_study(spec);
  mhe::emit_outputs(report, cli.out_dir, {cli.timing});
  print_metrics(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadrotor moving-horizon estimation workbench"};
  app.require_subcommand(1);

  CliOptions cli;
  app.add_option("--config", cli.config_path, "configuration file (INI-style)");
  app.add_option("--out", cli.out_dir, "output directory");
  app.add_option("--seed", cli.seed, "simulation seed")->each([&cli](const std::string&) {
    cli.seed_set = true;
  });
  app.add_option("--noise-level", cli.noise_level, "measurement noise level")
      ->check(CLI::Range(1, 3));
  app.add_option("--trajectory", cli.trajectory, "lemniscate, circle or hover");
  app.add_option("--estimators", cli.estimators, "comma list from {k,d,gp}");
  app.add_option("--nodes", cli.nodes, "estimation horizon node count N");
  app.add_option("--seeds", cli.seeds_list, "comma list of repetition seeds");
  app.add_flag("--timing", cli.timing,
               "also write wall-clock timing CSVs (not reproducible run-to-run)");

  auto* sim = app.add_subcommand("simulate", "closed-loop flight -> log CSV");
  sim->fallthrough();
  bool sim_payload = false;
  sim->add_flag("--payload", sim_payload, "enable the pick-and-place payload schedule");

  auto* train = app.add_subcommand("train-gp", "flight log -> residual GP model file");
  train->fallthrough();
  std::string train_log, train_attitude;
  int train_stride = 0, train_inducing = 0;
  train->add_option("--log", train_log, "input flight log CSV")->required();
  train->add_option("--attitude", train_attitude, "attitude source: kmhe (default) or truth");
  train->add_option("--stride", train_stride, "training-sample stride");
  train->add_option("--inducing", train_inducing, "inducing point count");

  auto* est = app.add_subcommand("estimate", "log + estimator -> trace and metrics");
  est->fallthrough();
  std::string est_log, est_kind = "d", est_gp_model;
  bool est_payload = false;
  est->add_option("--log", est_log, "input flight log CSV")->required();
  est->add_option("--estimator", est_kind, "k, d or gp");
  est->add_option("--gp-model", est_gp_model, "GP model file (required for gp)");
  est->add_flag("--payload-est", est_payload, "estimate the payload mass online");

  auto* cmp = app.add_subcommand("compare", "estimator comparison study");
  cmp->fallthrough();
  auto* sweep = app.add_subcommand("sweep", "horizon-length trade-off study");
  sweep->fallthrough();
  std::string sweep_nodes = "10,20,30,40,50,60";
  sweep->add_option("--nodes-list", sweep_nodes, "comma list of horizon lengths");
  auto* payload = app.add_subcommand("payload", "payload-mass estimation study");
  payload->fallthrough();

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(cli, sim_payload);
    if (train->parsed()) {
      return cmd_train_gp(cli, train_log, train_attitude, train_stride, train_inducing);
    }
    if (est->parsed()) return cmd_estimate(cli, est_log, est_kind, est_gp_model, est_payload);
    if (cmp->parsed()) return cmd_compare(cli);
    if (sweep->parsed()) return cmd_sweep(cli, sweep_nodes);
    if (payload->parsed()) return cmd_payload(cli);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
