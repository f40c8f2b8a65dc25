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

// Experiment configuration: JSON schema, defaults and validation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualmpc/basis.hpp"
#include "dualmpc/io.hpp"
#include "dualmpc/kernel.hpp"
#include "dualmpc/objective.hpp"
#include "dualmpc/plants.hpp"
#include "dualmpc/sfhdp.hpp"

namespace dualmpc {

enum class RunMode { kMpcAif, kMpcPlain, kTrajoptOnly, kFitGp, kSparsifyBench, kSigmaCheck };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

/// Reference trajectory over absolute time in seconds.
///   regulation   constant goal
///   lemniscate   X = a sin(2 pi t / T), Y = a/2 sin(4 pi t / T); heading and
///                speed from the curve's derivative (vehicle state layout)
struct ReferenceSpec {
  std::string kind = "regulation";
  Eigen::VectorXd goal;
  double scale = 10.0;
  double period = 40.0;
};

Eigen::VectorXd reference_path(const ReferenceSpec& spec, double t, int n_x);

/// Axis-aligned box over xi = (x, u).
struct RangeSpec {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct ProbeSpec {
  std::string kind = "random";  // "random" (uniform in a box) or "line" (lo to hi)
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int count = 64;
};

struct GpConfig {
  KernelParams kernel;
  std::string basis = "none";
  int basis_units = 0;        // polynomial degree, Fourier frequencies or RBF centres
  double rbf_length = 1.0;
  double prior_var = 1.0;
  std::size_t budget = 10;
  std::size_t initial_size = 10;
  RangeSpec ranges;
  int tune_steps = 0;
  std::size_t tune_subset = 0;  // 0: tune on every sample
};

struct ExperimentConfig {
  RunMode mode = RunMode::kMpcAif;
  PlantSpec plant;
  int horizon = 10;
  int steps = 0;
  Eigen::VectorXd x0;
  Eigen::MatrixXd init_cov;
  QuadraticCostSpec cost;
  ReferenceSpec reference;
  double gamma = 0.0;
  ExplorationMode exploration_mode = ExplorationMode::kOff;
  GpConfig gp;
  SolverOptions solver;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;
  bool belief_from_measurement = false;
  std::string dynamics = "gp";  // "gp" or "plant" (known model)
  ProbeSpec probe;
  // sparsify-bench
  std::size_t train_size = 1000;
  std::size_t test_size = 64;
  std::vector<std::string> bases;  // "kind" or "kind:units"; empty means gp.basis only
  std::size_t min_pool = 10;

  io::json source;  // the parsed input, kept for the run snapshot
};

/// Parses and validates. Unknown keys anywhere in the schema are rejected.
ExperimentConfig config_from_json(const io::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds the basis named in `gp`. RBF centres are drawn uniformly from
/// `gp.ranges` with the given seed.
BasisSpec make_basis(const GpConfig& gp, int input_dim, std::uint64_t seed);

/// `gp` with its basis replaced by a "kind" or "kind:units" entry.
GpConfig basis_variant(const GpConfig& gp, const std::string& entry);

/// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace dualmpc
