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

#include "dualmpc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "dualmpc/checkpoint.hpp"
#include "dualmpc/errors.hpp"
#include "dualmpc/parallel.hpp"
#include "dualmpc/plants.hpp"

namespace dualmpc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using io::json;

namespace {

void check_ranges(const RangeSpec& ranges, Index n_xi) {
  if (ranges.lo.size() != n_xi || ranges.hi.size() != n_xi)
    throw ConfigError("data ranges must cover every state and action coordinate");
  if ((ranges.lo.array() > ranges.hi.array()).any()) throw ConfigError("data ranges are empty (lo > hi)");
}

std::vector<std::string> numbered(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void append(std::vector<double>& row, const VectorXd& v) { row.insert(row.end(), v.data(), v.data() + v.size()); }

void append(std::vector<std::string>& header, const std::vector<std::string>& more) {
  header.insert(header.end(), more.begin(), more.end());
}

}  // namespace

Dataset generate_initial_dataset(const PlantSpec& plant, const RangeSpec& ranges, std::size_t size,
                                 std::uint64_t seed) {
  if (size < 1) throw ConfigError("initial dataset size must be at least 1");
  const int nx = plant.n_x, nu = plant.n_u;
  check_ranges(ranges, nx + nu);
  NoiseStream stream(plant.process_noise, seed);
  Dataset data{MatrixXd(nx + nu, static_cast<Index>(size)), MatrixXd(nx, static_cast<Index>(size))};
  for (Index j = 0; j < data.features.cols(); ++j) {
    for (Index d = 0; d < nx + nu; ++d) data.features(d, j) = stream.uniform(ranges.lo(d), ranges.hi(d));
    const VectorXd xi = data.features.col(j);
    data.targets.col(j) = plant_step(plant, xi.head(nx), xi.tail(nu)) + stream.sample();
  }
  return data;
}

io::CsvTable dataset_table(const Dataset& data, int n_x, int n_u) {
  io::CsvTable t;
  t.header = numbered("x_", n_x);
  append(t.header, numbered("u_", n_u));
  append(t.header, numbered("y_", n_x));
  for (Index j = 0; j < data.size(); ++j) {
    std::vector<double> row;
    append(row, data.features.col(j));
    append(row, data.targets.col(j));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Dataset read_dataset_csv(const std::filesystem::path& path, int n_x, int n_u) {
  if (!std::filesystem::exists(path)) throw ConfigError("data file not found: " + path.string());
  const auto csv = io::read_csv(path);
  const auto cols = static_cast<std::size_t>(2 * n_x + n_u);
  if (csv.header.size() != cols)
    throw ConfigError("data file must have " + std::to_string(cols) + " columns (x, u, y)");
  Dataset data{MatrixXd(n_x + n_u, static_cast<Index>(csv.rows.size())),
               MatrixXd(n_x, static_cast<Index>(csv.rows.size()))};
  for (std::size_t j = 0; j < csv.rows.size(); ++j) {
    const auto& r = csv.rows[j];
    if (r.size() != cols) throw ConfigError("data row " + std::to_string(j + 1) + " has the wrong column count");
    for (int d = 0; d < n_x + n_u; ++d) data.features(d, static_cast<Index>(j)) = r[static_cast<std::size_t>(d)];
    for (int d = 0; d < n_x; ++d)
      data.targets(d, static_cast<Index>(j)) = r[static_cast<std::size_t>(n_x + n_u + d)];
  }
  if (!data.features.allFinite() || !data.targets.allFinite()) throw ConfigError("data file has non-finite values");
  return data;
}

ModelGP sparsify_to(ModelGP model, std::size_t size) {
  for (auto& sub : model.subsystems)
    while (static_cast<std::size_t>(sub.size()) > size) sub = remove(std::move(sub), lowest_score_index(elimination_scores(sub)));
  return model;
}

ModelGP build_model(const GpConfig& gp, const Dataset& data, std::size_t budget, std::uint64_t seed,
                    std::vector<TuneResult>* tuning) {
  if (data.size() < 1) throw ConfigError("cannot build a model from an empty dataset");
  const int n_xi = static_cast<int>(data.features.rows());
  const auto nx = static_cast<std::size_t>(data.targets.rows());
  const BasisSpec basis = make_basis(gp, n_xi, derive_seed(seed, kBasisStream));
  std::vector<KernelParams> kernels(nx, gp.kernel);
  std::vector<BasisSpec> bases(nx, basis);
  std::vector<ParametricPrior> priors(nx, ParametricPrior::isotropic(basis.n_theta(), gp.prior_var));
  if (tuning) tuning->clear();
  if (gp.tune_steps > 0) {
    const Index m = gp.tune_subset == 0 ? data.size() : std::min<Index>(data.size(), static_cast<Index>(gp.tune_subset));
    TuneOptions opts;
    opts.steps = gp.tune_steps;
    for (std::size_t i = 0; i < nx; ++i) {
      const auto tr = tune(data.features.leftCols(m), data.targets.row(static_cast<Index>(i)).head(m).transpose(),
                           gp.kernel, basis, priors[i], opts);
      kernels[i] = tr.kernel;
      bases[i] = tr.basis;
      if (tuning) tuning->push_back(tr);
    }
  }
  return sparsify_to(fit_model(data.features, data.targets, kernels, bases, priors, budget), budget);
}

DynamicsModel gp_dynamics(std::shared_ptr<const ModelGP> model) {
  const int nx = model->state_dim();
  const int nu = model->input_dim() - nx;
  return {nx, nu, [model](const VectorXd& xi) { return model->predict(xi); }};
}

DynamicsModel plant_dynamics(const PlantSpec& plant) {
  const int nx = plant.n_x, nu = plant.n_u;
  return {nx, nu, [plant, nx, nu](const VectorXd& xi) {
            return MeanCov{plant_step(plant, xi.head(nx), xi.tail(nu)), plant.process_noise};
          }};
}

CostFunctions make_costs(const QuadraticCostSpec& cost, const ExplorationSpec& expl,
                         std::shared_ptr<const ModelGP> model, int t0, int horizon, bool from_gp_variances) {
  if (expl.active() && !model) throw ConfigError("exploration needs a GP model");
  CostFunctions c;
  c.stage = [cost, expl, model, t0, from_gp_variances](int k, const VectorXd& xi, const MeanCov& dyn) {
    double v = stage_cost(cost, xi, t0 + k);
    if (expl.active()) {
      const double e = from_gp_variances && expl.mode == ExplorationMode::kFull
                           ? exploration_cost_from_variances(*model, dyn.cov.diagonal())
                           : exploration_cost(*model, xi, expl.mode);
      v += expl.gamma * (e + expl.offset);
    }
    return v;
  };
  c.terminal = [cost, t0, horizon](const VectorXd& x) { return terminal_cost(cost, x, t0 + horizon); };
  return c;
}

MatrixXd probe_inputs(const ProbeSpec& probe, std::uint64_t seed) {
  const Index n = probe.lo.size();
  MatrixXd out(n, probe.count);
  if (probe.kind == "line") {
    for (int j = 0; j < probe.count; ++j) {
      const double s = probe.count == 1 ? 0.0 : static_cast<double>(j) / (probe.count - 1);
      out.col(j) = probe.lo + s * (probe.hi - probe.lo);
    }
    return out;
  }
  NoiseStream stream(MatrixXd::Identity(1, 1), seed);
  for (int j = 0; j < probe.count; ++j)
    for (Index d = 0; d < n; ++d) out(d, j) = stream.uniform(probe.lo(d), probe.hi(d));
  return out;
}

namespace {

ModelQuality quality_against(const ModelGP& model, const MatrixXd& inputs, const MatrixXd& truth) {
  ModelQuality q;
  const Index m = inputs.cols();
  if (m == 0) return q;
  for (Index i = 0; i < model.state_dim(); ++i) {
    const auto p = predict_batch(model.subsystems[static_cast<std::size_t>(i)], inputs);
    q.mse += (p.mean - truth.row(i).transpose()).squaredNorm();
    q.mean_var += p.var.sum();
  }
  q.mse /= static_cast<double>(m * model.state_dim());
  q.mean_var /= static_cast<double>(m);
  return q;
}

}  // namespace

ModelQuality model_quality(const ModelGP& model, const PlantSpec& plant, const MatrixXd& probes) {
  MatrixXd truth(plant.n_x, probes.cols());
  for (Index j = 0; j < probes.cols(); ++j)
    truth.col(j) = plant_step(plant, probes.col(j).head(plant.n_x), probes.col(j).tail(plant.n_u));
  return quality_against(model, probes, truth);
}

ModelQuality model_quality(const ModelGP& model, const Dataset& test) {
  return quality_against(model, test.features, test.targets);
}

RunSummary metrics(const std::vector<StepRecord>& rows, const QuadraticCostSpec& cost, int n_x) {
  RunSummary s;
  s.steps = static_cast<int>(rows.size());
  s.final_state = VectorXd::Zero(n_x);
  for (const auto& r : rows) {
    const VectorXd d = r.x_next - cost.reference(r.t + 1);
    s.error += d.dot(cost.W * d);
    s.control_effort += r.u.dot(cost.R * r.u);
    s.mean_solve_ms += r.solve_ms;
    if (r.solver_stalled) ++s.stalls;
  }
  if (!rows.empty()) {
    s.mean_solve_ms /= static_cast<double>(rows.size());
    s.final_state = rows.back().x_next;
    s.final_distance = (s.final_state - cost.reference(rows.back().t + 1)).norm();
  }
  return s;
}

RunRecord run_mpc(const ExperimentConfig& config) {
  using Clock = std::chrono::steady_clock;
  const PlantSpec& plant = config.plant;
  const int nx = plant.n_x, nu = plant.n_u, H = config.horizon;
  const bool use_gp = config.dynamics == "gp";

  const Dataset d0 = generate_initial_dataset(plant, config.gp.ranges, config.gp.initial_size,
                                              derive_seed(config.seed, kDataStream));
  auto model = std::make_shared<ModelGP>(build_model(config.gp, d0, config.gp.budget, config.seed));
  const MatrixXd probes = probe_inputs(config.probe, derive_seed(config.seed, kProbeStream));
  NoiseStream plant_noise(plant.process_noise, derive_seed(config.seed, kPlantStream));

  RunRecord rec;
  const ModelQuality start = model_quality(*model, plant, probes);
  GaussianBelief belief(config.x0, config.init_cov);
  VectorXd x = config.x0;
  MatrixXd warm = MatrixXd::Zero(H, nu);
  bool diverged = false;
  int skipped = 0;

  for (int t = 0; t < config.steps; ++t) {
    const ExplorationSpec expl = make_exploration(*model, config.gamma, config.exploration_mode);
    const DynamicsModel dyn = use_gp ? gp_dynamics(model) : plant_dynamics(plant);
    const CostFunctions costs = make_costs(config.cost, expl, model, t, H, use_gp);

    const auto t0 = Clock::now();
    SolveResult res = solve(belief, dyn, costs, H, config.solver, warm);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    StepRecord row;
    row.t = t;
    row.belief_mean = belief.mean;
    row.belief_var = belief.cov.diagonal();
    row.u = clip_action(plant, res.policy.action(0, belief.mean));
    VectorXd xi(nx + nu);
    xi << x, row.u;
    row.stage_cost = stage_cost(config.cost, xi, t);
    row.exploration_cost = expl.active() ? exploration_cost(*model, xi, expl.mode) : 0.0;
    row.solver_iterations = res.iterations;
    row.solver_stalled = res.stalled;
    row.solve_ms = ms;

    VectorXd x_next;
    try {
      x_next = plant_step(plant, x, row.u) + plant_noise.sample();
      if (!x_next.allFinite()) throw DivergenceError("plant state is not finite");
    } catch (const DivergenceError&) {
      diverged = true;
      rec.histories.push_back(std::move(res.history));
      break;
    }
    row.x_next = x_next;

    GpUpdateStats stats;
    auto updated = std::make_shared<ModelGP>(gp_update(*model, xi, x_next, &stats, config.solver.exec));
    skipped += stats.skipped;
    model = std::move(updated);

    if (config.belief_from_measurement) {
      belief = GaussianBelief(x_next, plant.process_noise);
    } else {
      const MeanCov pred = model->predict(xi);
      belief = GaussianBelief(pred.mean, pred.cov);
    }
    x = x_next;
    warm = shift_actions(res.actions());
    rec.rows.push_back(std::move(row));
    rec.histories.push_back(std::move(res.history));
  }

  rec.summary = metrics(rec.rows, config.cost, nx);
  rec.summary.model_start = start;
  rec.summary.model_end = model_quality(*model, plant, probes);
  rec.summary.diverged = diverged;
  rec.summary.skipped_updates = skipped;
  rec.summary.belief_source = config.belief_from_measurement ? "measurement" : "gp";
  rec.summary.final_pool = model->subsystems.empty() ? 0 : static_cast<std::size_t>(model->subsystems.front().size());
  rec.model = *model;
  return rec;
}

TrajoptResult run_trajopt(const ExperimentConfig& config) {
  const PlantSpec& plant = config.plant;
  const Dataset data = generate_initial_dataset(plant, config.gp.ranges, config.gp.initial_size,
                                                derive_seed(config.seed, kDataStream));
  auto model = std::make_shared<ModelGP>(build_model(config.gp, data, config.gp.budget, config.seed));
  const bool use_gp = config.dynamics == "gp";
  const DynamicsModel dyn = use_gp ? gp_dynamics(model) : plant_dynamics(plant);
  const ExplorationSpec expl = make_exploration(*model, config.gamma, config.exploration_mode);
  const CostFunctions costs = make_costs(config.cost, expl, model, 0, config.horizon, use_gp);

  TrajoptResult out;
  out.solve = solve(GaussianBelief(config.x0, config.init_cov), dyn, costs, config.horizon, config.solver);
  out.model = *model;
  out.initial_objective = out.solve.history.front().objective;
  out.final_objective = out.solve.history.back().objective;
  int n = 0;
  for (const auto& h : out.solve.history) {
    if (h.iteration < 1) continue;
    out.mean_iteration_ms += h.wall_ms;
    ++n;
  }
  if (n > 0) out.mean_iteration_ms /= n;
  return out;
}

std::vector<SparsifyCurve> run_sparsify_bench(const ExperimentConfig& config) {
  const PlantSpec& plant = config.plant;
  const Dataset train = generate_initial_dataset(plant, config.gp.ranges, config.train_size,
                                                 derive_seed(config.seed, kDataStream));
  const Dataset test = generate_initial_dataset(plant, config.gp.ranges, config.test_size,
                                                derive_seed(config.seed, kTestStream));
  const std::vector<std::string> entries = config.bases.empty() ? std::vector<std::string>{config.gp.basis} : config.bases;
  std::vector<SparsifyCurve> curves;
  for (const auto& entry : entries) {
    const GpConfig gp = basis_variant(config.gp, entry);
    SparsifyCurve curve;
    curve.basis = entry;
    ModelGP model = build_model(gp, train, config.train_size, config.seed, &curve.tuning);
    auto log = [&] {
      const auto q = model_quality(model, test);
      curve.rows.push_back({static_cast<std::size_t>(model.subsystems.front().size()), q.mse, q.mean_var});
    };
    log();
    while (static_cast<std::size_t>(model.subsystems.front().size()) > config.min_pool) {
      for_each_index(model.state_dim(), config.solver.exec, [&](std::ptrdiff_t i) {
        auto& sub = model.subsystems[static_cast<std::size_t>(i)];
        sub = remove(std::move(sub), lowest_score_index(elimination_scores(sub)));
      });
      log();
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

json summary_to_json(const RunSummary& s) {
  return json{{"steps", s.steps},
              {"error", s.error},
              {"control_effort", s.control_effort},
              {"mean_solve_ms", s.mean_solve_ms},
              {"final_state", io::vector_to_json(s.final_state)},
              {"final_distance", s.final_distance},
              {"model_mse_start", s.model_start.mse},
              {"model_mse_end", s.model_end.mse},
              {"probe_var_start", s.model_start.mean_var},
              {"probe_var_end", s.model_end.mean_var},
              {"stalls", s.stalls},
              {"skipped_updates", s.skipped_updates},
              {"diverged", s.diverged},
              {"belief_source", s.belief_source},
              {"final_pool", s.final_pool}};
}

namespace {

void prepare(const std::filesystem::path& dir, const ExperimentConfig& config) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "config.json", config.source.dump(2) + "\n");
}

}  // namespace

void write_run(const std::filesystem::path& dir, const ExperimentConfig& config, const RunRecord& record) {
  prepare(dir, config);
  const int nx = config.plant.n_x, nu = config.plant.n_u;
  io::CsvTable rows;
  rows.header = {"t"};
  append(rows.header, numbered("u_", nu));
  append(rows.header, numbered("x_", nx));
  append(rows.header, numbered("belief_mean_", nx));
  append(rows.header, numbered("belief_var_", nx));
  append(rows.header, {"stage_cost", "exploration_cost", "solver_iterations", "solver_stalled", "solve_ms"});
  for (const auto& r : record.rows) {
    std::vector<double> v{static_cast<double>(r.t)};
    append(v, r.u);
    append(v, r.x_next);
    append(v, r.belief_mean);
    append(v, r.belief_var);
    v.insert(v.end(), {r.stage_cost, r.exploration_cost, static_cast<double>(r.solver_iterations),
                       r.solver_stalled ? 1.0 : 0.0, r.solve_ms});
    rows.rows.push_back(std::move(v));
  }
  io::write_text(dir / "run_record.csv", rows.to_string());

  io::CsvTable hist;
  hist.header = {"step", "iteration", "objective", "alpha", "lambda", "wall_ms"};
  for (std::size_t t = 0; t < record.histories.size(); ++t)
    for (const auto& h : record.histories[t])
      hist.rows.push_back({static_cast<double>(t), static_cast<double>(h.iteration), h.objective, h.alpha, h.lambda,
                           h.wall_ms});
  io::write_text(dir / "solver_history.csv", hist.to_string());
  save_checkpoint(record.model, dir / "checkpoint.json");
  io::write_text(dir / "summary.json", summary_to_json(record.summary).dump(2) + "\n");
}

void write_trajopt(const std::filesystem::path& dir, const ExperimentConfig& config, const TrajoptResult& result) {
  prepare(dir, config);
  io::CsvTable hist;
  hist.header = {"iteration", "objective", "alpha", "lambda", "wall_ms"};
  for (const auto& h : result.solve.history)
    hist.rows.push_back({static_cast<double>(h.iteration), h.objective, h.alpha, h.lambda, h.wall_ms});
  io::write_text(dir / "solver_history.csv", hist.to_string());

  const auto& nom = result.solve.nominal;
  const int nx = nom.n_x, nu = nom.n_u;
  io::CsvTable traj;
  traj.header = {"k"};
  append(traj.header, numbered("x_mean_", nx));
  append(traj.header, numbered("x_var_", nx));
  append(traj.header, numbered("u_", nu));
  for (int k = 0; k <= nom.horizon(); ++k) {
    std::vector<double> v{static_cast<double>(k)};
    append(v, nom.x_mean(k));
    append(v, nom.x_cov(k).diagonal());
    append(v, k < nom.horizon() ? VectorXd(nom.u_mean(k)) : VectorXd::Zero(nu));
    traj.rows.push_back(std::move(v));
  }
  io::write_text(dir / "trajectory.csv", traj.to_string());
  save_checkpoint(result.model, dir / "checkpoint.json");
  const json s{{"initial_objective", result.initial_objective},
               {"final_objective", result.final_objective},
               {"iterations", result.solve.iterations},
               {"converged", result.solve.converged},
               {"stalled", result.solve.stalled},
               {"mean_iteration_ms", result.mean_iteration_ms}};
  io::write_text(dir / "summary.json", s.dump(2) + "\n");
}

void write_sparsify(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const std::vector<SparsifyCurve>& curves) {
  prepare(dir, config);
  json s = json::array();
  for (const auto& c : curves) {
    io::CsvTable t;
    t.header = {"pool", "test_mse", "mean_var"};
    for (const auto& r : c.rows) t.rows.push_back({static_cast<double>(r.pool), r.test_mse, r.mean_var});
    std::string name = c.basis;
    std::replace(name.begin(), name.end(), ':', '_');
    io::write_text(dir / ("sparsify_" + name + ".csv"), t.to_string());
    json tj = json::array();
    for (const auto& tr : c.tuning) tj.push_back({{"initial_nll", tr.initial_nll}, {"nll", tr.nll}});
    s.push_back({{"basis", c.basis},
                 {"tuning", tj},
                 {"mse_full", c.rows.front().test_mse},
                 {"mse_min_pool", c.rows.back().test_mse}});
  }
  io::write_text(dir / "summary.json", s.dump(2) + "\n");
}

}  // namespace dualmpc
