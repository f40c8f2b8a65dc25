/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Serial reference loop vs OpenMP kernel on a vehicle-sized GP model.
// The benchmark argument selects the execution: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <memory>

#include "dualmpc/config.hpp"
#include "dualmpc/harness.hpp"

namespace dualmpc {
namespace {

struct Fixture {
  ExperimentConfig cfg;
  std::shared_ptr<ModelGP> model;
  DynamicsModel dyn;
  CostFunctions costs;
  GaussianBelief belief;
  VectorXd xi;
  VectorXd x_next;

  Fixture() : cfg(load_config(std::string(DUALMPC_CONFIG_DIR) + "/vehicle_tracking.json")) {
    GpConfig gp = cfg.gp;
    gp.tune_steps = 0;
    const auto data = generate_initial_dataset(cfg.plant, gp.ranges, 60, 1);
    model = std::make_shared<ModelGP>(build_model(gp, data, 60, 1));
    dyn = gp_dynamics(model);
    const auto expl = make_exploration(*model, 5.0, ExplorationMode::kFull);
    costs = make_costs(cfg.cost, expl, model, 0, cfg.horizon, true);
    const int n = cfg.plant.n_x + cfg.plant.n_u;
    xi = 0.5 * (gp.ranges.lo + gp.ranges.hi);
    belief = GaussianBelief(xi, 1e-2 * MatrixXd::Identity(n, n));
    x_next = plant_step(cfg.plant, xi.head(cfg.plant.n_x), xi.tail(cfg.plant.n_u));
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void BM_EvaluateAtSigmaPoints(benchmark::State& state) {
  const auto& f = fixture();
  const auto sp = ut5_unit_points(static_cast<int>(f.xi.size()));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_at_sigma_points(f.dyn.eval, f.belief, sp, exec_of(state)));
}

void BM_MomentMatch(benchmark::State& state) {
  const auto& f = fixture();
  const auto sp = ut5_unit_points(static_cast<int>(f.xi.size()));
  for (auto _ : state) benchmark::DoNotOptimize(moment_match(f.dyn.eval, f.belief, sp, exec_of(state)));
}

void BM_GpUpdate(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(gp_update(*f.model, f.xi, f.x_next, nullptr, exec_of(state)));
}

void BM_ForwardPass(benchmark::State& state) {
  const auto& f = fixture();
  SolverOptions opts = f.cfg.solver;
  opts.exec = exec_of(state);
  const int nx = f.cfg.plant.n_x;
  const GaussianBelief init(f.xi.head(nx), 1e-3 * MatrixXd::Identity(nx, nx));
  const Policy policy = open_loop_policy(MatrixXd::Zero(f.cfg.horizon, f.cfg.plant.n_u), nx);
  for (auto _ : state) benchmark::DoNotOptimize(forward_pass(policy, f.dyn, f.costs, init, opts));
}

BENCHMARK(BM_EvaluateAtSigmaPoints)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentMatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GpUpdate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardPass)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dualmpc

BENCHMARK_MAIN();
