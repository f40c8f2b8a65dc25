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

#include "dualmpc/checkpoint.hpp"

#include "dualmpc/errors.hpp"

namespace dualmpc {

namespace {
constexpr const char* kFormat = "dualmpc-gp-checkpoint/1";
}

io::json kernel_to_json(const KernelParams& k) {
  return {{"amplitude", io::hex_double(k.amplitude)},
          {"w_diag", io::vector_to_json(k.w_diag)},
          {"noise", io::hex_double(k.noise)}};
}

KernelParams kernel_from_json(const io::json& j) {
  io::require_known_keys(j, {"amplitude", "w_diag", "noise"}, "kernel");
  KernelParams k;
  k.amplitude = io::parse_double(j.at("amplitude"));
  k.w_diag = io::number_list(j.at("w_diag"));
  k.noise = io::parse_double(j.at("noise"));
  return k;
}

io::json basis_to_json(const BasisSpec& b) {
  return {{"kind", to_string(b.kind)},
          {"input_dim", b.input_dim},
          {"degree", b.degree},
          {"frequencies", io::vector_to_json(b.frequencies)},
          {"projection", io::vector_to_json(b.projection)},
          {"centers", io::matrix_to_json(b.centers)},
          {"lengths", io::vector_to_json(b.lengths)}};
}

BasisSpec basis_from_json(const io::json& j) {
  io::require_known_keys(j, {"kind", "input_dim", "degree", "frequencies", "projection", "centers", "lengths"},
                         "basis");
  BasisSpec b;
  b.kind = basis_kind_from_string(j.at("kind").get<std::string>());
  b.input_dim = j.at("input_dim").get<int>();
  b.degree = j.value("degree", 0);
  if (j.contains("frequencies")) b.frequencies = io::vector_from_json(j["frequencies"]);
  if (j.contains("projection")) b.projection = io::vector_from_json(j["projection"]);
  if (j.contains("centers")) b.centers = io::matrix_from_json(j["centers"], b.input_dim);
  if (j.contains("lengths")) b.lengths = io::vector_from_json(j["lengths"]);
  b.validate();
  return b;
}

io::json subsystem_to_json(const SubsystemGP& sub) {
  return {{"kernel", kernel_to_json(sub.kernel)},
          {"basis", basis_to_json(sub.basis)},
          {"budget", sub.budget},
          {"prior", {{"mean", io::vector_to_json(sub.prior.mean)}, {"cov", io::matrix_to_json(sub.prior.cov)}}},
          {"features", io::matrix_to_json(sub.pool.transpose())},
          {"labels", io::vector_to_json(sub.labels)},
          {"alpha", io::vector_to_json(sub.alpha)},
          {"beta", io::matrix_to_json(sub.beta)},
          {"C", io::matrix_to_json(sub.cmat)},
          {"theta_mean", io::vector_to_json(sub.theta_mean)},
          {"theta_cov", io::matrix_to_json(sub.theta_cov)}};
}

SubsystemGP subsystem_from_json(const io::json& j) {
  io::require_known_keys(j,
                         {"kernel", "basis", "budget", "prior", "features", "labels", "alpha", "beta", "C",
                          "theta_mean", "theta_cov"},
                         "subsystem");
  SubsystemGP sub;
  sub.kernel = kernel_from_json(j.at("kernel"));
  sub.basis = basis_from_json(j.at("basis"));
  sub.budget = j.at("budget").get<std::size_t>();
  const int nt = sub.basis.n_theta();
  sub.prior.mean = io::vector_from_json(j.at("prior").at("mean"));
  sub.prior.cov = io::matrix_from_json(j.at("prior").at("cov"), nt);
  sub.pool = io::matrix_from_json(j.at("features"), sub.basis.input_dim).transpose();
  sub.labels = io::vector_from_json(j.at("labels"));
  sub.alpha = io::vector_from_json(j.at("alpha"));
  sub.beta = io::matrix_from_json(j.at("beta"), nt);
  sub.cmat = io::matrix_from_json(j.at("C"), sub.pool.cols());
  sub.theta_mean = io::vector_from_json(j.at("theta_mean"));
  sub.theta_cov = io::matrix_from_json(j.at("theta_cov"), nt);
  const auto n = sub.pool.cols();
  if (sub.pool.cols() > 0 && sub.pool.rows() != sub.basis.input_dim)
    throw ConfigError("checkpoint: feature width does not match the basis");
  if (sub.labels.size() != n || sub.alpha.size() != n || sub.beta.rows() != n || sub.cmat.rows() != n ||
      sub.cmat.cols() != n || sub.beta.cols() != nt || sub.theta_mean.size() != nt ||
      sub.theta_cov.rows() != nt || sub.prior.mean.size() != nt)
    throw ConfigError("checkpoint: inconsistent subsystem dimensions");
  sub.kernel.validate(sub.basis.input_dim);
  sub.refresh();
  return sub;
}

io::json model_to_json(const ModelGP& model) {
  io::json subs = io::json::array();
  for (const auto& s : model.subsystems) subs.push_back(subsystem_to_json(s));
  return {{"format", kFormat}, {"subsystems", subs}};
}

ModelGP model_from_json(const io::json& j) {
  io::require_known_keys(j, {"format", "subsystems"}, "checkpoint");
  if (j.at("format").get<std::string>() != kFormat)
    throw ConfigError("checkpoint: unsupported format " + j.at("format").dump());
  ModelGP model;
  for (const auto& s : j.at("subsystems")) model.subsystems.push_back(subsystem_from_json(s));
  model.validate();
  return model;
}

void save_checkpoint(const ModelGP& model, const std::filesystem::path& path) {
  io::write_text(path, model_to_json(model).dump(1) + "\n");
}

ModelGP load_checkpoint(const std::filesystem::path& path) {
  return model_from_json(io::read_json(path));
}

}  // namespace dualmpc
