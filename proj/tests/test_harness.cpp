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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "dualmpc/checkpoint.hpp"
#include "dualmpc/config.hpp"
#include "dualmpc/errors.hpp"
#include "dualmpc/harness.hpp"
#include "dualmpc/plants.hpp"

namespace dualmpc {
namespace {

namespace fs = std::filesystem;
using io::json;

const fs::path kConfigs = DUALMPC_CONFIG_DIR;

json scalar_config() {
  return json::parse(R"({
    "mode": "mpc-aif",
    "plant": {"name": "scalar_toy"},
    "horizon": 5,
    "steps": 12,
    "x0": [3.0],
    "init_cov": 0.001,
    "cost": {"W": 1.0, "R": 0.01, "W_H": 10.0, "reference": {"kind": "regulation", "goal": [0.0]}},
    "exploration": {"gamma": 0.1, "mode": "full"},
    "gp": {"kernel": {"amplitude": 1.0, "w": [4.0, 1.0], "noise": 0.001}, "basis": "none",
           "budget": 8, "initial_size": 5, "ranges": {"lo": [2.5, -1.0], "hi": [3.5, 1.0]}},
    "probe": {"kind": "line", "lo": [-1.0, 0.0], "hi": [4.0, 0.0], "count": 11},
    "solver": {"max_iters": 10, "tol": 1e-3},
    "seed": 4
  })");
}

RangeSpec box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  RangeSpec r;
  r.lo = Eigen::Map<const VectorXd>(lo.begin(), static_cast<Eigen::Index>(lo.size()));
  r.hi = Eigen::Map<const VectorXd>(hi.begin(), static_cast<Eigen::Index>(hi.size()));
  return r;
}

TEST(Dataset, DeterministicPerSeed) {
  const auto plant = pendulum_spec();
  const auto r = box({-1.0, -2.0, -3.0}, {1.0, 2.0, 3.0});
  const auto a = generate_initial_dataset(plant, r, 10, 42);
  const auto b = generate_initial_dataset(plant, r, 10, 42);
  const auto c = generate_initial_dataset(plant, r, 10, 43);
  EXPECT_EQ(a.size(), 10);
  EXPECT_TRUE(a.features == b.features);
  EXPECT_TRUE(a.targets == b.targets);
  EXPECT_FALSE(a.features == c.features);
  for (Eigen::Index j = 0; j < a.size(); ++j)
    for (Eigen::Index d = 0; d < 3; ++d) {
      EXPECT_GE(a.features(d, j), r.lo(d));
      EXPECT_LE(a.features(d, j), r.hi(d));
    }
}

TEST(Dataset, DegenerateRangesStillFit) {
  const auto plant = pendulum_spec();
  const auto r = box({0.5, 0.1, 0.0}, {0.5, 0.1, 0.0});
  const auto data = generate_initial_dataset(plant, r, 6, 1);
  for (Eigen::Index j = 1; j < data.size(); ++j) EXPECT_TRUE(data.features.col(j) == data.features.col(0));
  GpConfig gp;
  gp.kernel.w_diag = VectorXd::Ones(3);
  gp.ranges = r;
  const auto model = build_model(gp, data, 6, 1);
  EXPECT_TRUE(model.predict(data.features.col(0)).mean.allFinite());
}

TEST(Dataset, EmptyRangesRejected) {
  const auto plant = pendulum_spec();
  EXPECT_THROW(generate_initial_dataset(plant, box({1.0, 0.0, 0.0}, {0.0, 1.0, 1.0}), 5, 1), ConfigError);
  EXPECT_THROW(generate_initial_dataset(plant, box({0.0}, {1.0}), 5, 1), ConfigError);
  EXPECT_THROW(generate_initial_dataset(plant, box({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}), 0, 1), ConfigError);
}

TEST(Dataset, LabelResidualsMatchProcessNoise) {
  const auto plant = pendulum_spec();
  const auto r = box({-1.0, -2.0, -3.0}, {1.0, 2.0, 3.0});
  const int n = 10000;
  const auto data = generate_initial_dataset(plant, r, n, 9);
  for (Eigen::Index d = 0; d < 2; ++d) {
    double sum = 0.0, sum2 = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const VectorXd xi = data.features.col(j);
      const double e = data.targets(d, j) - plant_step(plant, xi.head(2), xi.tail(1))(d);
      sum += e;
      sum2 += e * e;
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    const double s2 = plant.process_noise(d, d);
    // Sample variance of n Gaussian draws has standard deviation s2 sqrt(2 / (n - 1)).
    EXPECT_NEAR(var, s2, 3.0 * s2 * std::sqrt(2.0 / (n - 1)));
  }
}

TEST(Dataset, CsvRoundTrip) {
  const auto plant = pendulum_spec();
  const auto data = generate_initial_dataset(plant, box({-1.0, -2.0, -3.0}, {1.0, 2.0, 3.0}), 7, 3);
  const fs::path path = fs::temp_directory_path() / "dualmpc_dataset.csv";
  io::write_text(path, dataset_table(data, 2, 1).to_string());
  const auto back = read_dataset_csv(path, 2, 1);
  EXPECT_TRUE(back.features == data.features);
  EXPECT_TRUE(back.targets == data.targets);
  fs::remove(path);
}

TEST(Reference, LemniscateOriginAndPeriod) {
  ReferenceSpec spec;
  spec.kind = "lemniscate";
  spec.scale = 40.0;
  spec.period = 30.0;
  const VectorXd r0 = reference_path(spec, 0.0, 6);
  EXPECT_NEAR(r0(0), 0.0, 1e-12);
  EXPECT_NEAR(r0(1), 0.0, 1e-12);
  // Tangent (a w, a w) at the origin: heading pi/4, speed a w sqrt(2).
  const double w = 2.0 * std::numbers::pi / spec.period;
  EXPECT_NEAR(r0(2), std::numbers::pi / 4.0, 1e-12);
  EXPECT_NEAR(r0(3), spec.scale * w * std::sqrt(2.0), 1e-12);
  const VectorXd rt = reference_path(spec, spec.period, 6);
  EXPECT_LE((rt.head(2) - r0.head(2)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(rt(2), r0(2), 1e-9);
  EXPECT_THROW(reference_path(spec, 0.0, 2), ConfigError);
}

TEST(Reference, LemniscateHeadingIsContinuous) {
  ReferenceSpec spec;
  spec.kind = "lemniscate";
  double prev = reference_path(spec, 0.0, 6)(2);
  for (int k = 1; k <= 400; ++k) {
    const double h = reference_path(spec, k * spec.period / 400.0, 6)(2);
    EXPECT_LT(std::abs(h - prev), 0.5) << k;
    prev = h;
  }
}

TEST(Reference, RegulationIsConstant) {
  ReferenceSpec spec;
  spec.goal = VectorXd::LinSpaced(2, 1.0, 2.0);
  for (double t : {0.0, 1.5, 1e3}) EXPECT_TRUE(reference_path(spec, t, 2) == spec.goal);
}

TEST(Metrics, PerfectTrackingZeroActions) {
  QuadraticCostSpec cost;
  cost.W = MatrixXd::Identity(2, 2);
  cost.R = MatrixXd::Identity(1, 1);
  cost.W_H = cost.W;
  cost.reference = [](int k) { return VectorXd::Constant(2, 0.1 * k); };
  std::vector<StepRecord> rows;
  for (int t = 0; t < 5; ++t) {
    StepRecord r;
    r.t = t;
    r.u = VectorXd::Zero(1);
    r.x_next = cost.reference(t + 1);
    r.solve_ms = 2.0;
    rows.push_back(r);
  }
  const auto s = metrics(rows, cost, 2);
  EXPECT_EQ(s.steps, 5);
  EXPECT_EQ(s.error, 0.0);
  EXPECT_EQ(s.control_effort, 0.0);
  EXPECT_EQ(s.mean_solve_ms, 2.0);
  EXPECT_EQ(s.final_distance, 0.0);
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
  }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_NO_THROW(config_from_json(scalar_config()));
  auto bad = [](const std::function<void(json&)>& edit) {
    json j = scalar_config();
    edit(j);
    return j;
  };
  EXPECT_THROW(config_from_json(bad([](json& j) { j["horizn"] = 3; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["gp"]["kernel"]["lengthscale"] = 1.0; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["solver"]["iters"] = 1; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["horizon"] = 0; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["gp"]["budget"] = 0; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["mode"] = "mpc-fast"; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["x0"] = json::array({1.0, 2.0}); })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["cost"]["reference"]["kind"] = "lemniscate"; })), ConfigError);
  EXPECT_THROW(config_from_json(bad([](json& j) { j["horizon"] = "ten"; })), ConfigError);
}

TEST(Config, PlainModeDisablesExploration) {
  json j = scalar_config();
  j["mode"] = "mpc-plain";
  const auto c = config_from_json(j);
  EXPECT_EQ(c.gamma, 0.0);
  EXPECT_EQ(c.exploration_mode, ExplorationMode::kOff);
}

TEST(RunMpc, ZeroStepsGivesEmptyRecord) {
  json j = scalar_config();
  j["steps"] = 0;
  const auto rec = run_mpc(config_from_json(j));
  EXPECT_TRUE(rec.rows.empty());
  EXPECT_EQ(rec.summary.steps, 0);
  EXPECT_EQ(rec.summary.error, 0.0);
}

TEST(RunMpc, AppliedActionIsPolicyAtBeliefMean) {
  const auto cfg = config_from_json(scalar_config());
  const auto rec = run_mpc(cfg);
  ASSERT_EQ(rec.rows.size(), static_cast<std::size_t>(cfg.steps));
  EXPECT_TRUE(rec.rows.front().belief_mean == cfg.x0);

  // Redo the first solve and evaluate its policy at the initial belief mean.
  const auto d0 = generate_initial_dataset(cfg.plant, cfg.gp.ranges, cfg.gp.initial_size,
                                           derive_seed(cfg.seed, kDataStream));
  auto model = std::make_shared<ModelGP>(build_model(cfg.gp, d0, cfg.gp.budget, cfg.seed));
  const auto expl = make_exploration(*model, cfg.gamma, cfg.exploration_mode);
  const auto res = solve(GaussianBelief(cfg.x0, cfg.init_cov), gp_dynamics(model),
                         make_costs(cfg.cost, expl, model, 0, cfg.horizon, true), cfg.horizon, cfg.solver,
                         MatrixXd::Zero(cfg.horizon, 1));
  const VectorXd u = clip_action(cfg.plant, res.policy.action(0, cfg.x0));
  EXPECT_TRUE(rec.rows.front().u == u);
}

TEST(RunMpc, PoolBudgetAndDeterminism) {
  const auto cfg = config_from_json(scalar_config());
  const auto a = run_mpc(cfg);
  const auto b = run_mpc(cfg);
  for (const auto& sub : a.model.subsystems) EXPECT_EQ(sub.size(), static_cast<Eigen::Index>(cfg.gp.budget));
  EXPECT_EQ(a.summary.final_pool, cfg.gp.budget);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_TRUE(a.rows[i].u == b.rows[i].u);
    EXPECT_TRUE(a.rows[i].x_next == b.rows[i].x_next);
  }
  EXPECT_EQ(io::json(model_to_json(a.model)), io::json(model_to_json(b.model)));
}

TEST(RunMpc, BeliefSourceIsLogged) {
  json j = scalar_config();
  j["steps"] = 2;
  j["belief_from_measurement"] = true;
  const auto rec = run_mpc(config_from_json(j));
  EXPECT_EQ(rec.summary.belief_source, "measurement");
  EXPECT_TRUE(rec.rows[1].belief_mean == rec.rows[0].x_next);
}

TEST(RunMpc, DenseGpMatchesKnownModel) {
  // Near-noiseless plant so that a dense GP can be exact over the visited region.
  json j = scalar_config();
  j["mode"] = "mpc-plain";
  j["steps"] = 8;
  j["plant"]["process_noise"] = 1e-8;
  j["cost"]["R"] = 1.0;
  j["gp"]["kernel"] = {{"amplitude", 1.0}, {"w", {0.05, 25.0}}, {"noise", 1e-6}};
  j["gp"]["budget"] = 300;
  j["gp"]["initial_size"] = 300;
  j["gp"]["ranges"] = {{"lo", {-1.0, -5.0}}, {"hi", {3.5, 5.0}}};
  j["gp"]["tune_steps"] = 50;
  j["solver"]["tol"] = 1e-6;
  j["solver"]["max_iters"] = 50;
  const auto learned = run_mpc(config_from_json(j));
  j["dynamics"] = "plant";
  const auto exact = run_mpc(config_from_json(j));
  ASSERT_EQ(learned.rows.size(), exact.rows.size());
  for (std::size_t i = 0; i < exact.rows.size(); ++i)
    EXPECT_NEAR(learned.rows[i].x_next(0), exact.rows[i].x_next(0), 1e-2) << i;
}

TEST(Sparsify, NoBasisPoolMatchesDenseGpOracle) {
  const auto cfg = load_config(kConfigs / "vehicle_sparsify.json");
  const auto data = generate_initial_dataset(cfg.plant, cfg.gp.ranges, 1000, 17);
  const auto test = generate_initial_dataset(cfg.plant, cfg.gp.ranges, 32, 18);
  const int nx = cfg.plant.n_x;
  std::vector<KernelParams> kernels(nx, cfg.gp.kernel);
  std::vector<BasisSpec> bases(nx, BasisSpec::none(8));
  std::vector<ParametricPrior> priors(nx, ParametricPrior::isotropic(0, 1.0));
  const auto model = fit_model(data.features, data.targets, kernels, bases, priors, 1000);
  const Eigen::LDLT<MatrixXd> ldlt(gram_matrix(data.features, cfg.gp.kernel));
  const MatrixXd weights = ldlt.solve(data.targets.transpose());
  for (Eigen::Index j = 0; j < test.size(); ++j) {
    const VectorXd ks = kernel_column(data.features, test.features.col(j), cfg.gp.kernel);
    const VectorXd mean = weights.transpose() * ks;
    const double var = cfg.gp.kernel.amplitude + cfg.gp.kernel.noise - ks.dot(ldlt.solve(ks));
    const auto got = model.predict(test.features.col(j));
    for (int d = 0; d < nx; ++d) {
      EXPECT_NEAR(got.mean(d), mean(d), 1e-8 * std::max(1.0, std::abs(mean(d))));
      EXPECT_NEAR(got.cov(d, d), var, 1e-8);
    }
  }
}

TEST(Sparsify, SparsifyToReachesSize) {
  const auto cfg = load_config(kConfigs / "vehicle_sparsify.json");
  const auto data = generate_initial_dataset(cfg.plant, cfg.gp.ranges, 40, 3);
  GpConfig gp = cfg.gp;
  gp.tune_steps = 0;
  const auto model = build_model(gp, data, 12, 3);
  for (const auto& sub : model.subsystems) EXPECT_EQ(sub.size(), 12);
}

}  // namespace
}  // namespace dualmpc
