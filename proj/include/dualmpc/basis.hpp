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

#pragma once

#include <string>

#include <Eigen/Dense>

namespace dualmpc {

enum class BasisKind { kNone, kLinear, kPolynomial, kFourier, kRbf };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// Feature map of the parametric part of the model.
///
///   linear      tanh[1, xi]                                n_xi + 1 units
///   polynomial  tanh[1, xi, xi^2, ..., xi^d]               d n_xi + 1 units
///   fourier     [1, sin(w_j v.xi), cos(w_j v.xi)]_j        2d + 1 units
///   rbf         [1, exp(-|xi - c_j|^2 / l_j)]_j            d + 1 units
///
/// For the Fourier variant the vector input is reduced to a scalar by a
/// projection onto the unit vector v / |v|.
struct BasisSpec {
  BasisKind kind = BasisKind::kNone;
  int input_dim = 0;
  int degree = 0;
  Eigen::VectorXd frequencies;
  Eigen::VectorXd projection;
  Eigen::MatrixXd centers;  // d x input_dim
  Eigen::VectorXd lengths;

  static BasisSpec none(int input_dim);
  static BasisSpec linear(int input_dim);
  static BasisSpec polynomial(int input_dim, int degree);
  static BasisSpec fourier(Eigen::VectorXd frequencies, Eigen::VectorXd projection);
  static BasisSpec rbf(Eigen::MatrixXd centers, Eigen::VectorXd lengths);

  int n_theta() const;
  /// Analytic bound on |phi(xi)|_2.
  double bound() const;
  void validate() const;
};

Eigen::VectorXd basis_eval(const BasisSpec& spec, const Eigen::VectorXd& xi);

/// Columns are basis_eval of each feature column (n_theta x N).
Eigen::MatrixXd basis_matrix(const BasisSpec& spec, const Eigen::MatrixXd& features);

}  // namespace dualmpc
