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

#include "dualmpc/config.hpp"

#include <cmath>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using io::json;

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kMpcAif: return "mpc-aif";
    case RunMode::kMpcPlain: return "mpc-plain";
    case RunMode::kTrajoptOnly: return "trajopt-only";
    case RunMode::kFitGp: return "fit-gp";
    case RunMode::kSparsifyBench: return "sparsify-bench";
    case RunMode::kSigmaCheck: return "sigma-check";
  }
  return "mpc-aif";
}

RunMode run_mode_from_string(const std::string& name) {
  for (auto m : {RunMode::kMpcAif, RunMode::kMpcPlain, RunMode::kTrajoptOnly, RunMode::kFitGp,
                 RunMode::kSparsifyBench, RunMode::kSigmaCheck})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown mode '" + name + "'");
}

VectorXd reference_path(const ReferenceSpec& spec, double t, int n_x) {
  if (spec.kind == "regulation") {
    if (spec.goal.size() != n_x) throw ConfigError("regulation goal must have n_x entries");
    return spec.goal;
  }
  if (spec.kind == "lemniscate") {
    if (n_x != 6) throw ConfigError("lemniscate reference needs the 6-state vehicle layout");
    const double w = 2.0 * M_PI / spec.period;
    const double a = spec.scale;
    const double dx = a * w * std::cos(w * t);
    const double dy = a * w * std::cos(2.0 * w * t);
    VectorXd r = VectorXd::Zero(6);
    r(0) = a * std::sin(w * t);
    r(1) = 0.5 * a * std::sin(2.0 * w * t);
    // The unwrapped tangent heading of this curve stays inside [-5pi/4, pi/4],
    // so one fixed branch keeps it continuous.
    r(2) = std::atan2(dy, dx);
    if (r(2) > M_PI / 2.0) r(2) -= 2.0 * M_PI;
    r(3) = std::hypot(dx, dy);
    return r;
  }
  throw ConfigError("unknown reference kind '" + spec.kind + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finaliser over the combined value
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

MatrixXd weight_matrix(const json& j, int n, const std::string& what) {
  if (j.is_number()) return j.get<double>() * MatrixXd::Identity(n, n);
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    MatrixXd m = io::matrix_from_json(j);
    if (m.rows() != n || m.cols() != n) throw ConfigError(what + " must be " + std::to_string(n) + "x" + std::to_string(n));
    return m;
  }
  const VectorXd d = io::number_list(j);
  if (d.size() != n) throw ConfigError(what + " diagonal must have " + std::to_string(n) + " entries");
  return d.asDiagonal();
}

VectorXd sized_list(const json& j, Eigen::Index n, const std::string& what) {
  VectorXd v = io::number_list(j);
  if (v.size() == 1 && n > 1) v = VectorXd::Constant(n, v(0));
  if (v.size() != n) throw ConfigError(what + " must have " + std::to_string(n) + " entries");
  return v;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

PlantSpec parse_plant(const json& j) {
  io::require_known_keys(j, {"name", "dt", "params", "process_noise", "action_bounds"}, "plant");
  if (!j.contains("name")) throw ConfigError("plant.name is required");
  PlantSpec p = plant_spec(j.at("name").get<std::string>());
  p.dt = get_or(j, "dt", p.dt);
  if (j.contains("params")) {
    for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it) {
      if (p.params.find(it.key()) == p.params.end())
        throw ConfigError("plant '" + p.name + "' has no parameter '" + it.key() + "'");
      p.params[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("process_noise")) p.process_noise = weight_matrix(j.at("process_noise"), p.n_x, "plant.process_noise");
  if (j.contains("action_bounds")) {
    MatrixXd b = io::matrix_from_json(j.at("action_bounds"));
    p.action_bounds = b;
  }
  p.validate();
  return p;
}

GpConfig parse_gp(const json& j, int n_xi) {
  io::require_known_keys(j,
                         {"kernel", "basis", "basis_units", "rbf_length", "prior_var", "budget", "initial_size",
                          "ranges", "tune_steps", "tune_subset"},
                         "gp");
  GpConfig g;
  g.kernel.w_diag = VectorXd::Ones(n_xi);
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    io::require_known_keys(k, {"amplitude", "w", "noise"}, "gp.kernel");
    g.kernel.amplitude = get_or(k, "amplitude", g.kernel.amplitude);
    if (k.contains("w")) g.kernel.w_diag = sized_list(k.at("w"), n_xi, "gp.kernel.w");
    g.kernel.noise = get_or(k, "noise", g.kernel.noise);
  }
  g.kernel.validate(n_xi);
  g.basis = get_or<std::string>(j, "basis", g.basis);
  basis_kind_from_string(g.basis);
  g.basis_units = get_or(j, "basis_units", g.basis_units);
  g.rbf_length = get_or(j, "rbf_length", g.rbf_length);
  g.prior_var = get_or(j, "prior_var", g.prior_var);
  g.budget = get_or<std::size_t>(j, "budget", g.budget);
  g.initial_size = get_or<std::size_t>(j, "initial_size", g.budget);
  g.tune_steps = get_or(j, "tune_steps", g.tune_steps);
  g.tune_subset = get_or<std::size_t>(j, "tune_subset", g.tune_subset);
  if (!j.contains("ranges")) throw ConfigError("gp.ranges is required");
  const auto& r = j.at("ranges");
  io::require_known_keys(r, {"lo", "hi"}, "gp.ranges");
  g.ranges.lo = sized_list(r.at("lo"), n_xi, "gp.ranges.lo");
  g.ranges.hi = sized_list(r.at("hi"), n_xi, "gp.ranges.hi");
  if ((g.ranges.lo.array() > g.ranges.hi.array()).any()) throw ConfigError("gp.ranges: lo exceeds hi");
  if (g.budget < 1) throw ConfigError("gp.budget must be at least 1");
  if (g.initial_size < 1) throw ConfigError("gp.initial_size must be at least 1");
  if (!(g.prior_var > 0.0)) throw ConfigError("gp.prior_var must be positive");
  if (!(g.rbf_length > 0.0)) throw ConfigError("gp.rbf_length must be positive");
  if (g.tune_steps < 0) throw ConfigError("gp.tune_steps must be non-negative");
  return g;
}

SolverOptions parse_solver(const json& j) {
  io::require_known_keys(
      j, {"max_iters", "tol", "reg0", "line_search_steps", "deterministic_mode", "action_cov_floor", "parallel"},
      "solver");
  SolverOptions s;
  s.max_iters = get_or(j, "max_iters", s.max_iters);
  s.tol = get_or(j, "tol", s.tol);
  s.reg0 = get_or(j, "reg0", s.reg0);
  s.line_search_steps = get_or(j, "line_search_steps", s.line_search_steps);
  s.deterministic_mode = get_or(j, "deterministic_mode", s.deterministic_mode);
  s.action_cov_floor = get_or(j, "action_cov_floor", s.action_cov_floor);
  if (j.contains("parallel")) s.exec = j.at("parallel").get<bool>() ? Execution::kParallel : Execution::kSerial;
  if (s.max_iters < 0) throw ConfigError("solver.max_iters must be non-negative");
  if (!(s.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (!(s.reg0 >= 0.0)) throw ConfigError("solver.reg0 must be non-negative");
  if (s.line_search_steps < 1) throw ConfigError("solver.line_search_steps must be at least 1");
  if (!(s.action_cov_floor >= 0.0)) throw ConfigError("solver.action_cov_floor must be non-negative");
  return s;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  io::require_known_keys(j,
                         {"mode", "plant", "horizon", "steps", "x0", "init_cov", "cost", "exploration", "gp", "solver",
                          "seed", "output_dir", "belief_from_measurement", "dynamics", "probe", "train_size",
                          "test_size", "bases", "min_pool", "comment"},
                         "config");
  ExperimentConfig c;
  c.source = j;
  c.mode = run_mode_from_string(get_or<std::string>(j, "mode", "mpc-aif"));
  if (!j.contains("plant")) throw ConfigError("plant is required");
  c.plant = parse_plant(j.at("plant"));
  const int nx = c.plant.n_x, nu = c.plant.n_u;
  c.horizon = get_or(j, "horizon", c.horizon);
  c.steps = get_or(j, "steps", c.steps);
  if (c.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (c.steps < 0) throw ConfigError("steps must be non-negative");
  c.x0 = j.contains("x0") ? sized_list(j.at("x0"), nx, "x0") : VectorXd::Zero(nx);
  c.init_cov = j.contains("init_cov") ? weight_matrix(j.at("init_cov"), nx, "init_cov") : 1e-3 * MatrixXd::Identity(nx, nx);

  c.cost.W = MatrixXd::Identity(nx, nx);
  c.cost.R = MatrixXd::Identity(nu, nu);
  c.cost.W_H = MatrixXd::Identity(nx, nx);
  c.reference.goal = VectorXd::Zero(nx);
  if (j.contains("cost")) {
    const auto& cj = j.at("cost");
    io::require_known_keys(cj, {"W", "R", "W_H", "reference"}, "cost");
    if (cj.contains("W")) c.cost.W = weight_matrix(cj.at("W"), nx, "cost.W");
    if (cj.contains("R")) c.cost.R = weight_matrix(cj.at("R"), nu, "cost.R");
    if (cj.contains("W_H")) c.cost.W_H = weight_matrix(cj.at("W_H"), nx, "cost.W_H");
    if (cj.contains("reference")) {
      const auto& r = cj.at("reference");
      io::require_known_keys(r, {"kind", "goal", "scale", "period"}, "cost.reference");
      c.reference.kind = get_or<std::string>(r, "kind", "regulation");
      if (r.contains("goal")) c.reference.goal = sized_list(r.at("goal"), nx, "cost.reference.goal");
      c.reference.scale = get_or(r, "scale", c.reference.scale);
      c.reference.period = get_or(r, "period", c.reference.period);
      if (!(c.reference.period > 0.0)) throw ConfigError("cost.reference.period must be positive");
    }
  }
  reference_path(c.reference, 0.0, nx);
  {
    const ReferenceSpec ref = c.reference;
    const double dt = c.plant.dt;
    c.cost.reference = [ref, dt, nx](int k) { return reference_path(ref, k * dt, nx); };
  }
  c.cost.validate();

  if (j.contains("exploration")) {
    const auto& e = j.at("exploration");
    io::require_known_keys(e, {"gamma", "mode"}, "exploration");
    c.gamma = get_or(e, "gamma", 0.0);
    c.exploration_mode = exploration_mode_from_string(get_or<std::string>(e, "mode", c.gamma > 0 ? "full" : "off"));
    if (!(c.gamma >= 0.0)) throw ConfigError("exploration.gamma must be non-negative");
  }
  if (c.mode == RunMode::kMpcPlain) {
    c.gamma = 0.0;
    c.exploration_mode = ExplorationMode::kOff;
  }
  if (c.gamma == 0.0) c.exploration_mode = ExplorationMode::kOff;

  if (!j.contains("gp")) throw ConfigError("gp section is required");
  c.gp = parse_gp(j.at("gp"), nx + nu);
  if (j.contains("solver")) c.solver = parse_solver(j.at("solver"));
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.output_dir = get_or<std::string>(j, "output_dir", "");
  c.belief_from_measurement = get_or(j, "belief_from_measurement", false);
  c.dynamics = get_or<std::string>(j, "dynamics", "gp");
  if (c.dynamics != "gp" && c.dynamics != "plant") throw ConfigError("dynamics must be 'gp' or 'plant'");

  c.probe.lo = c.gp.ranges.lo;
  c.probe.hi = c.gp.ranges.hi;
  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    io::require_known_keys(p, {"kind", "lo", "hi", "count"}, "probe");
    c.probe.kind = get_or<std::string>(p, "kind", c.probe.kind);
    if (p.contains("lo")) c.probe.lo = sized_list(p.at("lo"), nx + nu, "probe.lo");
    if (p.contains("hi")) c.probe.hi = sized_list(p.at("hi"), nx + nu, "probe.hi");
    c.probe.count = get_or(p, "count", c.probe.count);
    if (c.probe.kind != "random" && c.probe.kind != "line") throw ConfigError("probe.kind must be 'random' or 'line'");
    if (c.probe.count < 1) throw ConfigError("probe.count must be positive");
  }
  c.train_size = get_or<std::size_t>(j, "train_size", c.train_size);
  c.test_size = get_or<std::size_t>(j, "test_size", c.test_size);
  c.min_pool = get_or<std::size_t>(j, "min_pool", c.min_pool);
  if (j.contains("bases")) c.bases = j.at("bases").get<std::vector<std::string>>();
  for (const auto& b : c.bases) basis_variant(c.gp, b);
  if (c.train_size < 1 || c.test_size < 1) throw ConfigError("train_size and test_size must be positive");
  if (c.min_pool < 1) throw ConfigError("min_pool must be at least 1");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = io::read_json(path);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

GpConfig basis_variant(const GpConfig& gp, const std::string& entry) {
  GpConfig out = gp;
  const auto colon = entry.find(':');
  out.basis = entry.substr(0, colon);
  basis_kind_from_string(out.basis);
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      out.basis_units = std::stoi(entry.substr(colon + 1), &used);
      if (used != entry.size() - colon - 1) throw std::invalid_argument(entry);
    } catch (const std::exception&) {
      throw ConfigError("bad basis entry '" + entry + "'");
    }
  }
  return out;
}

BasisSpec make_basis(const GpConfig& gp, int input_dim, std::uint64_t seed) {
  const BasisKind kind = basis_kind_from_string(gp.basis);
  const int d = gp.basis_units;
  switch (kind) {
    case BasisKind::kNone: return BasisSpec::none(input_dim);
    case BasisKind::kLinear: return BasisSpec::linear(input_dim);
    case BasisKind::kPolynomial:
      if (d < 1) throw ConfigError("polynomial basis needs basis_units >= 1");
      return BasisSpec::polynomial(input_dim, d);
    case BasisKind::kFourier: {
      if (d < 1) throw ConfigError("fourier basis needs basis_units >= 1");
      return BasisSpec::fourier(VectorXd::LinSpaced(d, 1.0, static_cast<double>(d)) * 0.5,
                                VectorXd::Ones(input_dim));
    }
    case BasisKind::kRbf: {
      if (d < 1) throw ConfigError("rbf basis needs basis_units >= 1");
      if (gp.ranges.lo.size() != input_dim) throw ConfigError("rbf centres need ranges over every input");
      NoiseStream stream(MatrixXd::Identity(1, 1), seed);
      MatrixXd centers(d, input_dim);
      for (int j = 0; j < d; ++j)
        for (int c = 0; c < input_dim; ++c) centers(j, c) = stream.uniform(gp.ranges.lo(c), gp.ranges.hi(c));
      return BasisSpec::rbf(centers, VectorXd::Constant(d, gp.rbf_length));
    }
  }
  return BasisSpec::none(input_dim);
}

}  // namespace dualmpc
