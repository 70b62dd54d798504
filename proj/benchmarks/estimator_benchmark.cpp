#include "mhe/estimator.hpp"
#include "mhe/flight_sim.hpp"

#include <benchmark/benchmark.h>

namespace {

// One warm-started real-time-iteration step at steady state, per horizon
// length and model kind.
void bm_rti_step(benchmark::State& state, mhe::ModelKind kind) {
  const int nodes = static_cast<int>(state.range(0));

  mhe::SimConfig sim;
  sim.trajectory = mhe::TrajectoryKind::Lemniscate;
  sim.timing = {4.0, 4.0};
  sim.sensors = mhe::sensors_for_level(3, 21);
  const mhe::FlightLog log = mhe::run_flight(sim);

  mhe::EstimatorConfig cfg;
  cfg.kind = kind;
  cfg.horizon_nodes = nodes;
  cfg.dt = 0.01;
  cfg.weights = mhe::default_weights(kind, sim.sensors.sigma_p, sim.sensors.sigma_w,
                                     sim.sensors.sigma_a);
  cfg.max_iterations = 1;

  mhe::ModelState init = mhe::ModelState::zero(kind);
  init.set_position(log.rows.front().p_meas);
  if (kind == mhe::ModelKind::Kinematic) init.set_extra(log.rows.front().a_meas);

  mhe::MovingHorizonEstimator est(cfg, mhe::NominalParams{}, init);
  int i = 0;
  for (int k = 0; k < nodes + 2; ++k) est.estimate_step(log.frame(i++));

  for (auto _ : state) {
    if (i >= log.size()) {
      state.PauseTiming();
      mhe::MovingHorizonEstimator fresh(cfg, mhe::NominalParams{}, init);
      est = fresh;
      i = 0;
      for (int k = 0; k < nodes + 2; ++k) est.estimate_step(log.frame(i++));
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(est.estimate_step(log.frame(i++)));
  }
}

void bm_rti_step_kinematic(benchmark::State& state) {
  bm_rti_step(state, mhe::ModelKind::Kinematic);
}
void bm_rti_step_dynamic(benchmark::State& state) {
  bm_rti_step(state, mhe::ModelKind::Dynamic);
}

BENCHMARK(bm_rti_step_kinematic)->DenseRange(10, 60, 10)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_rti_step_dynamic)->DenseRange(10, 60, 10)->Unit(benchmark::kMillisecond);

}  // namespace
