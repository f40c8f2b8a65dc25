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

#include "dualmpc/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dualmpc/errors.hpp"

namespace dualmpc {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLogClamp = 18.4;  // keeps positives within [1e-8, 1e8]

struct Packing {
  Index n_xi = 0;
  Index n_rbf = 0;
  Index n_freq = 0;
  Index n_proj = 0;

  Index size() const { return 2 + n_xi + n_rbf + n_freq + n_proj; }
};

Packing packing_for(const KernelParams& k, const BasisSpec& b, bool tune_basis) {
  Packing p;
  p.n_xi = k.w_diag.size();
  if (tune_basis && b.kind == BasisKind::kRbf) p.n_rbf = b.lengths.size();
  if (tune_basis && b.kind == BasisKind::kFourier) {
    p.n_freq = b.frequencies.size();
    p.n_proj = b.projection.size();
  }
  return p;
}

VectorXd pack(const Packing& p, const KernelParams& k, const BasisSpec& b) {
  VectorXd x(p.size());
  Index i = 0;
  x(i++) = std::log(k.amplitude);
  x.segment(i, p.n_xi) = k.w_diag.array().log();
  i += p.n_xi;
  x(i++) = std::log(k.noise);
  if (p.n_rbf) {
    x.segment(i, p.n_rbf) = b.lengths.array().log();
    i += p.n_rbf;
  }
  if (p.n_freq) {
    x.segment(i, p.n_freq) = b.frequencies.array().abs().max(1e-8).log();
    i += p.n_freq;
    x.segment(i, p.n_proj) = b.projection / b.projection.norm();
  }
  return x;
}

void unpack(const Packing& p, const VectorXd& x, KernelParams& k, BasisSpec& b) {
  auto pos = [](double v) { return std::exp(std::clamp(v, -kLogClamp, kLogClamp)); };
  Index i = 0;
  k.amplitude = pos(x(i++));
  for (Index j = 0; j < p.n_xi; ++j) k.w_diag(j) = pos(x(i++));
  k.noise = pos(x(i++));
  for (Index j = 0; j < p.n_rbf; ++j) b.lengths(j) = pos(x(i++));
  for (Index j = 0; j < p.n_freq; ++j) b.frequencies(j) = pos(x(i++));
  for (Index j = 0; j < p.n_proj; ++j) b.projection(j) = x(i++);
}

}  // namespace

double marginal_nll(const MatrixXd& features, const VectorXd& labels, const KernelParams& kernel,
                    const BasisSpec& basis, const ParametricPrior& prior) {
  const Index n = features.cols();
  if (labels.size() != n) throw DimensionError("marginal_nll: features/labels mismatch");
  MatrixXd cov = gram_matrix(features, kernel);
  VectorXd resid = labels;
  if (basis.n_theta() > 0) {
    const MatrixXd phi = basis_matrix(basis, features);
    cov.noalias() += phi.transpose() * prior.cov * phi;
    resid.noalias() -= phi.transpose() * prior.mean;
  }
  if (!cov.allFinite()) return std::numeric_limits<double>::infinity();
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const VectorXd w = llt.matrixL().solve(resid);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double nll =
      0.5 * w.squaredNorm() + 0.5 * logdet + 0.5 * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

TuneResult tune(const MatrixXd& features, const VectorXd& labels, const KernelParams& kernel,
                const BasisSpec& basis, const ParametricPrior& prior, const TuneOptions& options) {
  if (features.cols() < 2) throw TuningError("tune: need at least two samples");
  TuneResult out{kernel, basis, 0.0, 0.0, 0};
  const Packing packing = packing_for(kernel, basis, options.tune_basis);

  KernelParams k = kernel;
  BasisSpec b = basis;
  auto objective = [&](const VectorXd& x) {
    unpack(packing, x, k, b);
    return marginal_nll(features, labels, k, b, prior);
  };

  VectorXd x = pack(packing, kernel, basis);
  double f = objective(x);
  if (!std::isfinite(f)) throw TuningError("tune: negative log-likelihood is not finite");
  out.initial_nll = out.nll = f;
  if (options.steps <= 0) return out;

  double rate = options.initial_rate;
  VectorXd grad(x.size());
  for (int step = 0; step < options.steps; ++step) {
    for (Index i = 0; i < x.size(); ++i) {
      VectorXd xp = x, xm = x;
      xp(i) += options.fd_step;
      xm(i) -= options.fd_step;
      const double d = (objective(xp) - objective(xm)) / (2.0 * options.fd_step);
      grad(i) = std::isfinite(d) ? d : 0.0;
    }
    const double gnorm = grad.norm();
    if (!(gnorm > 0.0)) break;
    const VectorXd trial = x - rate * grad / gnorm;
    const double ft = objective(trial);
    if (ft < f) {
      x = trial;
      f = ft;
      rate *= 1.2;
      ++out.accepted_steps;
    } else {
      rate *= 0.5;
      if (rate < 1e-10) break;
    }
  }
  unpack(packing, x, out.kernel, out.basis);
  if (out.basis.kind == BasisKind::kFourier)
    out.basis.projection /= out.basis.projection.norm();
  out.nll = f;
  return out;
}

}  // namespace dualmpc
