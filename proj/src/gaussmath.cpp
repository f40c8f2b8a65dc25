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

#include "dualmpc/gaussmath.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "dualmpc/errors.hpp"

namespace dualmpc {

namespace {
Execution g_default_execution =
#ifdef DUALMPC_HAVE_OPENMP
    Execution::kParallel;
#else
    Execution::kSerial;
#endif
}  // namespace

Execution default_execution() noexcept { return g_default_execution; }
void set_default_execution(Execution exec) noexcept { g_default_execution = exec; }

bool openmp_available() noexcept {
#ifdef DUALMPC_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

SigmaPointSet ut5_unit_points(int n) {
  if (n < 1) throw DimensionError("ut5_unit_points: dimension must be >= 1");
  const double r = std::sqrt(3.0);
  const double nn = static_cast<double>(n);
  const Eigen::Index count = 2 * static_cast<Eigen::Index>(n) * n + 1;

  SigmaPointSet sp;
  sp.dim = n;
  sp.points = MatrixXd::Zero(n, count);
  sp.weights.resize(count);

  Eigen::Index col = 0;
  sp.weights(col++) = 1.0 + (nn * nn - 7.0 * nn) / 18.0;
  const double w_axis = (4.0 - nn) / 18.0;
  for (int i = 0; i < n; ++i) {
    for (double s : {1.0, -1.0}) {
      sp.points(i, col) = s * r;
      sp.weights(col++) = w_axis;
    }
  }
  const double w_pair = 1.0 / 36.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          sp.points(i, col) = si * r;
          sp.points(j, col) = sj * r;
          sp.weights(col++) = w_pair;
        }
      }
    }
  }
  return sp;
}

CholeskyResult chol_psd(const MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw DimensionError("chol_psd: matrix is not square");
  const Eigen::Index n = cov.rows();
  if (n == 0) return {MatrixXd(0, 0), 0.0};
  if (!cov.allFinite()) throw NotPositiveSemidefinite("chol_psd: non-finite entries", 0.0);

  static constexpr std::array<double, 6> kLadder = {0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4};
  const MatrixXd sym = 0.5 * (cov + cov.transpose());
  for (double jitter : kLadder) {
    Eigen::LLT<MatrixXd> llt(sym + jitter * MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    MatrixXd l = llt.matrixL();
    if (!l.allFinite() || (l.diagonal().array() <= 0.0).any()) continue;
    return {std::move(l), jitter};
  }
  std::ostringstream os;
  os << "chol_psd: factorization failed at jitter " << kLadder.back();
  throw NotPositiveSemidefinite(os.str(), kLadder.back());
}

MatrixXd symmetrize_clip(const MatrixXd& cov) {
  MatrixXd sym = 0.5 * (cov + cov.transpose());
  if (sym.rows() == 0) return sym;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() >= -1e-10) return sym;
  const VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  MatrixXd out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

MatrixXd sigma_points_for(const GaussianBelief& belief, const SigmaPointSet& sp,
                          const MatrixXd& sqrt_cov) {
  if (sp.dim != belief.dim())
    throw DimensionError("sigma points do not match the belief dimension");
  MatrixXd pts = sqrt_cov * sp.points;
  pts.colwise() += belief.mean;
  return pts;
}

SigmaEvaluation evaluate_at_sigma_points(const MeanCovFn& fn, const GaussianBelief& belief,
                                         const SigmaPointSet& sp, Execution exec) {
  SigmaEvaluation out;
  out.points = sigma_points_for(belief, sp, chol_psd(belief.cov).lower);
  out.values.resize(static_cast<std::size_t>(sp.size()));
  for_each_index(sp.size(), exec, [&](std::ptrdiff_t i) {
    out.values[static_cast<std::size_t>(i)] = fn(out.points.col(i));
  });
  return out;
}

GaussianBelief moment_match_from(const SigmaEvaluation& eval, const SigmaPointSet& sp) {
  if (eval.values.empty()) throw DimensionError("moment_match: no evaluations");
  const Eigen::Index m = eval.values.front().mean.size();
  VectorXd mean = VectorXd::Zero(m);
  MatrixXd second = MatrixXd::Zero(m, m);
  for (Eigen::Index n = 0; n < sp.size(); ++n) {
    const MeanCov& v = eval.values[static_cast<std::size_t>(n)];
    if (v.mean.size() != m || v.cov.rows() != m || v.cov.cols() != m)
      throw DimensionError("moment_match: inconsistent output dimension");
    if (!v.mean.allFinite() || !v.cov.allFinite())
      throw NumericalError("moment_match: non-finite function output");
    const double w = sp.weights(n);
    mean.noalias() += w * v.mean;
    second.noalias() += w * (v.mean * v.mean.transpose() + v.cov);
  }
  MatrixXd cov = second - mean * mean.transpose();
  return {std::move(mean), symmetrize_clip(cov)};
}

GaussianBelief moment_match(const MeanCovFn& fn, const GaussianBelief& belief,
                            const SigmaPointSet& sp, Execution exec) {
  return moment_match_from(evaluate_at_sigma_points(fn, belief, sp, exec), sp);
}

GaussianBelief moment_match(const std::function<VectorXd(const VectorXd&)>& mean_fn,
                            const std::function<MatrixXd(const VectorXd&)>& cov_fn,
                            const GaussianBelief& belief, const SigmaPointSet& sp,
                            Execution exec) {
  auto combined = [&](const VectorXd& xi) {
    MeanCov mc{mean_fn(xi), cov_fn(xi)};
    const double scale = std::max(1.0, mc.cov.cwiseAbs().maxCoeff());
    if ((mc.cov - mc.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw NumericalError("moment_match: cov_fn returned an asymmetric matrix");
    return mc;
  };
  return moment_match(MeanCovFn(combined), belief, sp, exec);
}

double expectation(const std::function<double(const VectorXd&)>& g,
                   const GaussianBelief& belief, const SigmaPointSet& sp, Execution exec) {
  const MatrixXd pts = sigma_points_for(belief, sp, chol_psd(belief.cov).lower);
  VectorXd vals(sp.size());
  for_each_index(sp.size(), exec, [&](std::ptrdiff_t i) { vals(i) = g(pts.col(i)); });
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sp.size(); ++i) acc += sp.weights(i) * vals(i);
  return acc;
}

namespace {

double standard_normal_moment(int k) {
  if (k % 2) return 0.0;
  double m = 1.0;
  for (int j = k - 1; j > 1; j -= 2) m *= j;
  return m;
}

}  // namespace

std::vector<double> moment_errors(const SigmaPointSet& sp, int max_degree) {
  if (max_degree < 0) throw DimensionError("moment_errors: negative degree");
  std::vector<double> worst(static_cast<std::size_t>(max_degree) + 1, 0.0);
  std::vector<int> idx(static_cast<std::size_t>(sp.dim), 0);
  std::function<void(int, int)> visit = [&](int d, int degree) {
    if (d == sp.dim) {
      double exact = 1.0;
      for (int k : idx) exact *= standard_normal_moment(k);
      double rule = 0.0;
      for (Eigen::Index j = 0; j < sp.size(); ++j) {
        double term = sp.weights(j);
        for (int c = 0; c < sp.dim; ++c) term *= std::pow(sp.points(c, j), idx[static_cast<std::size_t>(c)]);
        rule += term;
      }
      auto& w = worst[static_cast<std::size_t>(degree)];
      w = std::max(w, std::abs(rule - exact));
      return;
    }
    for (int k = 0; degree + k <= max_degree; ++k) {
      idx[static_cast<std::size_t>(d)] = k;
      visit(d + 1, degree + k);
    }
    idx[static_cast<std::size_t>(d)] = 0;
  };
  visit(0, 0);
  return worst;
}

}  // namespace dualmpc
