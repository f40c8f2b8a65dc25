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

#include "dualmpc/basis.hpp"

#include <cmath>

#include "dualmpc/errors.hpp"

namespace dualmpc {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::kNone: return "none";
    case BasisKind::kLinear: return "linear";
    case BasisKind::kPolynomial: return "polynomial";
    case BasisKind::kFourier: return "fourier";
    case BasisKind::kRbf: return "rbf";
  }
  return "none";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "none") return BasisKind::kNone;
  if (name == "linear") return BasisKind::kLinear;
  if (name == "polynomial") return BasisKind::kPolynomial;
  if (name == "fourier") return BasisKind::kFourier;
  if (name == "rbf") return BasisKind::kRbf;
  throw ConfigError("unknown basis kind '" + name + "'");
}

BasisSpec BasisSpec::none(int input_dim) {
  BasisSpec s;
  s.input_dim = input_dim;
  return s;
}

BasisSpec BasisSpec::linear(int input_dim) {
  BasisSpec s;
  s.kind = BasisKind::kLinear;
  s.input_dim = input_dim;
  s.degree = 1;
  return s;
}

BasisSpec BasisSpec::polynomial(int input_dim, int degree) {
  BasisSpec s;
  s.kind = BasisKind::kPolynomial;
  s.input_dim = input_dim;
  s.degree = degree;
  return s;
}

BasisSpec BasisSpec::fourier(Eigen::VectorXd frequencies, Eigen::VectorXd projection) {
  BasisSpec s;
  s.kind = BasisKind::kFourier;
  s.input_dim = static_cast<int>(projection.size());
  s.degree = static_cast<int>(frequencies.size());
  s.frequencies = std::move(frequencies);
  s.projection = std::move(projection);
  return s;
}

BasisSpec BasisSpec::rbf(Eigen::MatrixXd centers, Eigen::VectorXd lengths) {
  BasisSpec s;
  s.kind = BasisKind::kRbf;
  s.input_dim = static_cast<int>(centers.cols());
  s.degree = static_cast<int>(centers.rows());
  s.centers = std::move(centers);
  s.lengths = std::move(lengths);
  return s;
}

int BasisSpec::n_theta() const {
  switch (kind) {
    case BasisKind::kNone: return 0;
    case BasisKind::kLinear: return input_dim + 1;
    case BasisKind::kPolynomial: return degree * input_dim + 1;
    case BasisKind::kFourier: return 2 * degree + 1;
    case BasisKind::kRbf: return degree + 1;
  }
  return 0;
}

double BasisSpec::bound() const {
  switch (kind) {
    case BasisKind::kNone: return 0.0;
    case BasisKind::kLinear:
    case BasisKind::kPolynomial: return std::sqrt(static_cast<double>(n_theta()));
    case BasisKind::kFourier: return std::sqrt(2.0 * degree + 1.0);
    case BasisKind::kRbf: return std::sqrt(degree + 1.0);
  }
  return 0.0;
}

void BasisSpec::validate() const {
  if (input_dim < 1) throw ConfigError("basis input dimension must be >= 1");
  switch (kind) {
    case BasisKind::kNone: break;
    case BasisKind::kLinear:
      if (degree != 1) throw ConfigError("linear basis must have degree 1");
      break;
    case BasisKind::kPolynomial:
      if (degree < 1) throw ConfigError("polynomial basis needs degree >= 1");
      break;
    case BasisKind::kFourier:
      if (degree < 1 || frequencies.size() != degree)
        throw ConfigError("fourier basis needs one frequency per unit pair");
      if (projection.size() != input_dim || !(projection.norm() > 0.0))
        throw ConfigError("fourier projection must be a nonzero input-sized vector");
      break;
    case BasisKind::kRbf:
      if (degree < 1 || centers.rows() != degree || centers.cols() != input_dim)
        throw ConfigError("rbf centers must be d x n_xi");
      if (lengths.size() != degree || (lengths.array() <= 0.0).any())
        throw ConfigError("rbf lengths must be d positive values");
      break;
  }
}

Eigen::VectorXd basis_eval(const BasisSpec& spec, const Eigen::VectorXd& xi) {
  if (xi.size() != spec.input_dim) throw DimensionError("basis_eval: dimension mismatch");
  const int nt = spec.n_theta();
  Eigen::VectorXd phi(nt);
  switch (spec.kind) {
    case BasisKind::kNone: break;
    case BasisKind::kLinear:
    case BasisKind::kPolynomial: {
      phi(0) = 1.0;
      Eigen::VectorXd power = xi;
      for (int p = 0; p < spec.degree; ++p) {
        phi.segment(1 + p * spec.input_dim, spec.input_dim) = power;
        power = power.cwiseProduct(xi);
      }
      phi = phi.array().tanh();
      break;
    }
    case BasisKind::kFourier: {
      const double s = spec.projection.dot(xi) / spec.projection.norm();
      phi(0) = 1.0;
      for (int j = 0; j < spec.degree; ++j) {
        phi(1 + 2 * j) = std::sin(spec.frequencies(j) * s);
        phi(2 + 2 * j) = std::cos(spec.frequencies(j) * s);
      }
      break;
    }
    case BasisKind::kRbf: {
      phi(0) = 1.0;
      for (int j = 0; j < spec.degree; ++j) {
        const double d2 = (xi.transpose() - spec.centers.row(j)).squaredNorm();
        phi(1 + j) = std::exp(-d2 / spec.lengths(j));
      }
      break;
    }
  }
  return phi;
}

Eigen::MatrixXd basis_matrix(const BasisSpec& spec, const Eigen::MatrixXd& features) {
  Eigen::MatrixXd out(spec.n_theta(), features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) out.col(j) = basis_eval(spec, features.col(j));
  return out;
}

}  // namespace dualmpc
