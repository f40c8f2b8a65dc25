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

// Receding-horizon loop, offline experiments and run output.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualmpc/config.hpp"
#include "dualmpc/io.hpp"
#include "dualmpc/objective.hpp"
#include "dualmpc/sfhdp.hpp"
#include "dualmpc/sgp.hpp"
#include "dualmpc/tuning.hpp"

namespace dualmpc {

/// Stream tags mixed into the experiment seed with derive_seed().
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kPlantStream = 2;
constexpr std::uint64_t kProbeStream = 3;
constexpr std::uint64_t kTestStream = 4;
constexpr std::uint64_t kBasisStream = 5;

/// Transition samples: features xi = (x, u) and next states, one per column.
struct Dataset {
  Eigen::MatrixXd features;  // n_xi x N
  Eigen::MatrixXd targets;   // n_x x N

  Eigen::Index size() const { return features.cols(); }
};

/// Uniform (x, u) in the box, labelled by one noisy plant step each.
Dataset generate_initial_dataset(const PlantSpec& plant, const RangeSpec& ranges, std::size_t size,
                                 std::uint64_t seed);

/// Columns x_1..x_nx, u_1..u_nu, y_1..y_nx with a header row.
Dataset read_dataset_csv(const std::filesystem::path& path, int n_x, int n_u);
io::CsvTable dataset_table(const Dataset& data, int n_x, int n_u);

/// Tunes one kernel per output dimension (on the first `tune_subset`
/// samples), fits the model and sparsifies it down to `budget`.
ModelGP build_model(const GpConfig& gp, const Dataset& data, std::size_t budget, std::uint64_t seed,
                    std::vector<TuneResult>* tuning = nullptr);

/// Removes lowest-score points from every subsystem until each holds `size`.
ModelGP sparsify_to(ModelGP model, std::size_t size);

DynamicsModel gp_dynamics(std::shared_ptr<const ModelGP> model);
DynamicsModel plant_dynamics(const PlantSpec& plant);

/// Task cost with the reference shifted to absolute step t0, plus the
/// exploration term. With `from_gp_variances` the full-mode term reads the
/// GP variances the dynamics already returned instead of re-predicting.
CostFunctions make_costs(const QuadraticCostSpec& cost, const ExplorationSpec& expl,
                         std::shared_ptr<const ModelGP> model, int t0, int horizon, bool from_gp_variances);

/// Probe inputs over xi (n_xi x count).
Eigen::MatrixXd probe_inputs(const ProbeSpec& probe, std::uint64_t seed);

struct ModelQuality {
  double mse = 0.0;       // mean squared error against the noise-free plant step
  double mean_var = 0.0;  // mean over probes of the summed predictive variances
};

ModelQuality model_quality(const ModelGP& model, const PlantSpec& plant, const Eigen::MatrixXd& probes);
/// Same, against the stored (noisy) targets of a held-out set.
ModelQuality model_quality(const ModelGP& model, const Dataset& test);

struct StepRecord {
  int t = 0;
  Eigen::VectorXd u;            // applied action
  Eigen::VectorXd x_next;       // observed state after the action
  Eigen::VectorXd belief_mean;  // planning belief at t
  Eigen::VectorXd belief_var;
  double stage_cost = 0.0;
  double exploration_cost = 0.0;
  int solver_iterations = 0;
  bool solver_stalled = false;
  double solve_ms = 0.0;
};

struct RunSummary {
  int steps = 0;
  double error = 0.0;           // sum_t (x_t - ref_t)^T W (x_t - ref_t) over observed states
  double control_effort = 0.0;  // sum_t u_t^T R u_t
  double mean_solve_ms = 0.0;
  Eigen::VectorXd final_state;
  double final_distance = 0.0;  // |x_T - ref_T|
  ModelQuality model_start;
  ModelQuality model_end;
  int stalls = 0;
  int skipped_updates = 0;
  bool diverged = false;
  std::string belief_source;
  std::size_t final_pool = 0;
};

struct RunRecord {
  std::vector<StepRecord> rows;
  std::vector<std::vector<HistoryRow>> histories;  // solver history of every step
  RunSummary summary;
  ModelGP model;
};

/// Error, control effort and mean solve time of a record.
RunSummary metrics(const std::vector<StepRecord>& rows, const QuadraticCostSpec& cost, int n_x);

RunRecord run_mpc(const ExperimentConfig& config);

struct TrajoptResult {
  SolveResult solve;
  ModelGP model;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double mean_iteration_ms = 0.0;
};

TrajoptResult run_trajopt(const ExperimentConfig& config);

struct SparsifyRow {
  std::size_t pool = 0;
  double test_mse = 0.0;
  double mean_var = 0.0;
};

struct SparsifyCurve {
  std::string basis;
  std::vector<TuneResult> tuning;
  std::vector<SparsifyRow> rows;  // pool sizes in decreasing order
};

std::vector<SparsifyCurve> run_sparsify_bench(const ExperimentConfig& config);

/// Writes config.json, run_record.csv, solver_history.csv, checkpoint.json
/// and summary.json into `dir`.
void write_run(const std::filesystem::path& dir, const ExperimentConfig& config, const RunRecord& record);
void write_trajopt(const std::filesystem::path& dir, const ExperimentConfig& config, const TrajoptResult& result);
void write_sparsify(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const std::vector<SparsifyCurve>& curves);

io::json summary_to_json(const RunSummary& s);

}  // namespace dualmpc
