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

// GP pool snapshots.
//
// Schema ("format": "dualmpc-gp-checkpoint/1"): an object with a
// "subsystems" array, one entry per output dimension:
//
//   kernel     {amplitude, w_diag[], noise}
//   basis      {kind, input_dim, degree, frequencies[], projection[],
//               centers[][], lengths[]}
//   budget     integer
//   prior      {mean[], cov[][]}
//   features   [][]   one row per pool entry
//   labels     []
//   alpha      []
//   beta       [][]   |pool| rows, n_theta columns
//   C          [][]
//   theta_mean []
//   theta_cov  [][]
//
// Every real is written as a C99 hex-float string so a save/load cycle is
// bit-exact.

#pragma once

#include <filesystem>

#include "dualmpc/io.hpp"
#include "dualmpc/sgp.hpp"

namespace dualmpc {

io::json kernel_to_json(const KernelParams& k);
KernelParams kernel_from_json(const io::json& j);
io::json basis_to_json(const BasisSpec& b);
BasisSpec basis_from_json(const io::json& j);

io::json subsystem_to_json(const SubsystemGP& sub);
SubsystemGP subsystem_from_json(const io::json& j);

io::json model_to_json(const ModelGP& model);
ModelGP model_from_json(const io::json& j);

void save_checkpoint(const ModelGP& model, const std::filesystem::path& path);
ModelGP load_checkpoint(const std::filesystem::path& path);

}  // namespace dualmpc
