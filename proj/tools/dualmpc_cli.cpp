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

// Command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dualmpc/checkpoint.hpp"
#include "dualmpc/config.hpp"
#include "dualmpc/errors.hpp"
#include "dualmpc/gaussmath.hpp"
#include "dualmpc/harness.hpp"

namespace fs = std::filesystem;
using namespace dualmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitDivergence = 4;

ExperimentConfig load(const std::string& path, const std::optional<std::uint64_t>& seed,
                      const std::string& out, const std::string& fallback_dir) {
  ExperimentConfig c = load_config(path);
  if (seed) {
    c.seed = *seed;
    c.source["seed"] = *seed;
  }
  if (!out.empty()) c.output_dir = out;
  if (c.output_dir.empty()) c.output_dir = fallback_dir;
  return c;
}

int run_mpc_cmd(const ExperimentConfig& c) {
  const RunRecord rec = run_mpc(c);
  write_run(c.output_dir, c, rec);
  const auto& s = rec.summary;
  std::printf("steps %d  error %.6g  control_effort %.6g  mean_solve_ms %.3f  stalls %d  final_distance %.6g\n",
              s.steps, s.error, s.control_effort, s.mean_solve_ms, s.stalls, s.final_distance);
  std::printf("output: %s\n", c.output_dir.string().c_str());
  if (s.diverged) {
    std::fprintf(stderr, "plant diverged after %d steps\n", s.steps);
    return kExitDivergence;
  }
  return kExitOk;
}

int run_trajopt_cmd(const ExperimentConfig& c) {
  const TrajoptResult r = run_trajopt(c);
  write_trajopt(c.output_dir, c, r);
  std::printf("objective %.6g -> %.6g  iterations %d  converged %d  stalled %d  ms/iter %.3f\n",
              r.initial_objective, r.final_objective, r.solve.iterations, r.solve.converged, r.solve.stalled,
              r.mean_iteration_ms);
  std::printf("output: %s\n", c.output_dir.string().c_str());
  return kExitOk;
}

int run_sparsify_cmd(const ExperimentConfig& c) {
  const auto curves = run_sparsify_bench(c);
  write_sparsify(c.output_dir, c, curves);
  for (const auto& cv : curves)
    std::printf("%-14s pool %zu mse %.6g  ->  pool %zu mse %.6g\n", cv.basis.c_str(), cv.rows.front().pool,
                cv.rows.front().test_mse, cv.rows.back().pool, cv.rows.back().test_mse);
  std::printf("output: %s\n", c.output_dir.string().c_str());
  return kExitOk;
}

int fit_gp_cmd(const ExperimentConfig& c, const std::string& data_path) {
  const Dataset data = read_dataset_csv(data_path, c.plant.n_x, c.plant.n_u);
  std::vector<TuneResult> tuning;
  const ModelGP model = build_model(c.gp, data, c.gp.budget, c.seed, &tuning);
  fs::create_directories(c.output_dir);
  save_checkpoint(model, c.output_dir / "checkpoint.json");
  const ModelQuality q = model_quality(model, data);
  io::json s{{"samples", data.size()}, {"pool", model.subsystems.front().size()}, {"train_mse", q.mse}};
  for (const auto& t : tuning) s["tuning"].push_back({{"initial_nll", t.initial_nll}, {"nll", t.nll}});
  io::write_text(c.output_dir / "summary.json", s.dump(2) + "\n");
  std::printf("fitted %td samples into pool %td, train mse %.6g\n", data.size(), model.subsystems.front().size(), q.mse);
  return kExitOk;
}

int sigma_check_cmd(int dim) {
  const auto sp = ut5_unit_points(dim);
  const auto errs = moment_errors(sp, 6);
  std::printf("dimension %d, %td points (2n^2+1 = %d)\n", dim, sp.size(), 2 * dim * dim + 1);
  bool ok = true;
  for (std::size_t d = 0; d < errs.size(); ++d) {
    const bool exact = errs[d] <= 1e-8;
    std::printf("  degree %zu  max error %.3e  %s\n", d, errs[d], exact ? "exact" : "not exact");
    if (d <= 5 && !exact) ok = false;
  }
  std::printf("%s\n", ok ? "degree <= 5 reproduced" : "degree <= 5 NOT reproduced");
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual model-predictive control with sparse semi-parametric GP models"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_path;
  std::optional<std::uint64_t> seed;
  int dim = 1;

  auto* mpc = app.add_subcommand("run-mpc", "receding-horizon dual control run");
  mpc->add_option("--config", config_path, "experiment JSON")->required();
  mpc->add_option("--seed", seed, "override the base seed");
  mpc->add_option("--out", out_dir, "output directory");

  auto* traj = app.add_subcommand("run-trajopt", "single-horizon trajectory optimisation on a fitted GP");
  traj->add_option("--config", config_path, "experiment JSON")->required();
  traj->add_option("--seed", seed, "override the base seed");
  traj->add_option("--out", out_dir, "output directory");

  auto* sparse = app.add_subcommand("sparsify-bench", "pool-size sweep by repeated elimination");
  sparse->add_option("--config", config_path, "experiment JSON")->required();
  sparse->add_option("--seed", seed, "override the base seed");
  sparse->add_option("--out", out_dir, "output directory");

  auto* fit = app.add_subcommand("fit-gp", "tune and fit a GP model on a CSV dataset");
  fit->add_option("--data", data_path, "CSV with columns x.., u.., y..")->required();
  fit->add_option("--config", config_path, "experiment JSON")->required();
  fit->add_option("--out", out_dir, "output directory");

  auto* sigma = app.add_subcommand("sigma-check", "moment exactness of the sigma-point rule");
  sigma->add_option("--dim", dim, "dimension")->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sigma) return sigma_check_cmd(dim);
    if (*mpc) return run_mpc_cmd(load(config_path, seed, out_dir, "runs/mpc"));
    if (*traj) return run_trajopt_cmd(load(config_path, seed, out_dir, "runs/trajopt"));
    if (*sparse) return run_sparsify_cmd(load(config_path, seed, out_dir, "runs/sparsify"));
    if (*fit) return fit_gp_cmd(load(config_path, std::nullopt, out_dir, "runs/fit"), data_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const io::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
