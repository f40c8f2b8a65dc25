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

#include "dualmpc/sgp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dualmpc/errors.hpp"

namespace dualmpc {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd spd_inverse(const MatrixXd& m, const char* what) {
  if (m.rows() == 0) return MatrixXd(0, 0);
  Eigen::LLT<MatrixXd> llt(0.5 * (m + m.transpose()));
  if (llt.info() != Eigen::Success) throw FitError(std::string(what) + " is not positive definite");
  MatrixXd inv = llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

MatrixXd drop_row(const MatrixXd& m, Index r) {
  MatrixXd out(m.rows() - 1, m.cols());
  out.topRows(r) = m.topRows(r);
  out.bottomRows(m.rows() - r - 1) = m.bottomRows(m.rows() - r - 1);
  return out;
}

VectorXd drop_entry(const VectorXd& v, Index r) {
  VectorXd out(v.size() - 1);
  out.head(r) = v.head(r);
  out.tail(v.size() - r - 1) = v.tail(v.size() - r - 1);
  return out;
}

MatrixXd drop_row_col(const MatrixXd& m, Index r) {
  const Index n = m.rows();
  const Index tail = n - r - 1;
  MatrixXd out(n - 1, n - 1);
  out.topLeftCorner(r, r) = m.topLeftCorner(r, r);
  out.topRightCorner(r, tail) = m.topRightCorner(r, tail);
  out.bottomLeftCorner(tail, r) = m.bottomLeftCorner(tail, r);
  out.bottomRightCorner(tail, tail) = m.bottomRightCorner(tail, tail);
  return out;
}

}  // namespace

ParametricPrior ParametricPrior::isotropic(int n_theta, double variance) {
  return {VectorXd::Zero(n_theta), variance * MatrixXd::Identity(n_theta, n_theta)};
}

void SubsystemGP::refresh() {
  mean_weights = alpha;
  if (theta_mean.size() > 0 && alpha.size() > 0) mean_weights.noalias() -= beta * theta_mean;
}

SubsystemGP batch_fit(const MatrixXd& features, const VectorXd& labels, const KernelParams& kernel,
                      const BasisSpec& basis, const ParametricPrior& prior, std::size_t budget) {
  if (features.cols() != labels.size()) throw DimensionError("batch_fit: features/labels mismatch");
  if (features.cols() > 0 && features.rows() != basis.input_dim)
    throw DimensionError("batch_fit: feature dimension mismatch");
  kernel.validate(basis.input_dim);
  basis.validate();
  const int nt = basis.n_theta();
  if (prior.mean.size() != nt || prior.cov.rows() != nt || prior.cov.cols() != nt)
    throw DimensionError("batch_fit: prior does not match the basis size");

  SubsystemGP sub;
  sub.kernel = kernel;
  sub.basis = basis;
  sub.prior = prior;
  sub.budget = budget;
  sub.pool = features;
  sub.labels = labels;

  const Index n = features.cols();
  if (n == 0) {
    sub.alpha = VectorXd(0);
    sub.beta = MatrixXd(0, nt);
    sub.cmat = MatrixXd(0, 0);
    sub.theta_mean = prior.mean;
    sub.theta_cov = prior.cov;
    sub.refresh();
    return sub;
  }

  const MatrixXd k = gram_matrix(features, kernel);
  CholeskyResult chol;
  try {
    chol = chol_psd(k);
  } catch (const NotPositiveSemidefinite& e) {
    throw FitError(std::string("batch_fit: Gram matrix is singular: ") + e.what());
  }
  const MatrixXd& l = chol.lower;
  MatrixXd cmat = MatrixXd::Identity(n, n);
  l.triangularView<Eigen::Lower>().solveInPlace(cmat);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(cmat);
  cmat = 0.5 * (cmat + cmat.transpose());

  const MatrixXd phi = basis_matrix(basis, features);  // nt x n
  sub.cmat = cmat;
  sub.alpha = cmat * labels;
  sub.beta = cmat * phi.transpose();
  if (nt > 0) {
    const MatrixXd prior_info = spd_inverse(prior.cov, "parametric prior covariance");
    sub.theta_cov = spd_inverse(phi * sub.beta + prior_info, "parametric posterior precision");
    sub.theta_mean = sub.theta_cov * (phi * sub.alpha + prior_info * prior.mean);
  } else {
    sub.theta_cov = MatrixXd(0, 0);
    sub.theta_mean = VectorXd(0);
  }
  sub.refresh();
  return sub;
}

Prediction predict(const SubsystemGP& sub, const VectorXd& x) {
  if (x.size() != sub.input_dim()) throw DimensionError("predict: dimension mismatch");
  const VectorXd phi = basis_eval(sub.basis, x);
  const KernelParams& kp = sub.kernel;
  double mean = 0.0;
  double var = kp.amplitude + kp.noise;
  VectorXd r = -phi;
  if (phi.size() > 0) mean = phi.dot(sub.theta_mean);
  if (sub.size() > 0) {
    const VectorXd ks = kernel_column(sub.pool, x, kp);
    mean += sub.mean_weights.dot(ks);
    var -= ks.dot(sub.cmat.selfadjointView<Eigen::Lower>() * ks);
    if (phi.size() > 0) r.noalias() += sub.beta.transpose() * ks;
  }
  if (phi.size() > 0) var += r.dot(sub.theta_cov * r);
  return {mean, std::max(var, 1e-3 * kp.noise)};
}

BatchPrediction predict_batch(const SubsystemGP& sub, const MatrixXd& inputs) {
  if (inputs.cols() > 0 && inputs.rows() != sub.input_dim()) throw DimensionError("predict_batch: dimension mismatch");
  const Index m = inputs.cols();
  const KernelParams& kp = sub.kernel;
  BatchPrediction out{VectorXd::Zero(m), VectorXd::Constant(m, kp.amplitude + kp.noise)};
  const MatrixXd phi = basis_matrix(sub.basis, inputs);  // n_theta x m
  MatrixXd r = -phi;
  if (phi.rows() > 0) out.mean = phi.transpose() * sub.theta_mean;
  if (sub.size() > 0) {
    MatrixXd ks(sub.size(), m);
    for (Index j = 0; j < m; ++j) ks.col(j) = kernel_column(sub.pool, inputs.col(j), kp);
    out.mean.noalias() += ks.transpose() * sub.mean_weights;
    const MatrixXd cks = sub.cmat * ks;
    out.var -= ks.cwiseProduct(cks).colwise().sum().transpose();
    if (phi.rows() > 0) r.noalias() += sub.beta.transpose() * ks;
  }
  if (phi.rows() > 0) out.var += r.cwiseProduct(sub.theta_cov * r).colwise().sum().transpose();
  out.var = out.var.cwiseMax(1e-3 * kp.noise);
  return out;
}

SubsystemGP include(SubsystemGP sub, const VectorXd& xi, double y) {
  if (xi.size() != sub.input_dim()) throw DimensionError("include: dimension mismatch");
  const Index n = sub.size();
  const KernelParams& kp = sub.kernel;
  for (Index j = 0; j < n; ++j) {
    if ((sub.pool.col(j) - xi).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + xi.cwiseAbs().maxCoeff()))
      throw DegenerateInclusion("include: point duplicates pool entry " + std::to_string(j));
  }

  const VectorXd phi = basis_eval(sub.basis, xi);
  const VectorXd ks = kernel_column(sub.pool, xi, kp);
  const VectorXd cks = sub.cmat * ks;
  const double denom = kp.amplitude + kp.noise - ks.dot(cks);
  if (!(denom > 1e-12)) throw DegenerateInclusion("include: new point is numerically dependent");
  const double b = 1.0 / denom;

  const VectorXd r = sub.beta.transpose() * ks - phi;  // R(xi)
  const double gp_mean = phi.dot(sub.theta_mean) + sub.mean_weights.dot(ks);
  const VectorXd sr = sub.theta_cov * r;
  const double gp_var = r.dot(sr) + denom;
  const double a = b * (sub.alpha.dot(ks) - y);

  VectorXd s(n + 1);
  s.head(n) = cks;
  s(n) = -1.0;

  VectorXd alpha(n + 1);
  alpha.head(n) = sub.alpha;
  alpha(n) = 0.0;
  alpha += a * s;

  MatrixXd beta = MatrixXd::Zero(n + 1, sub.beta.cols());
  beta.topRows(n) = sub.beta;
  beta.noalias() += b * s * r.transpose();

  MatrixXd cmat = MatrixXd::Zero(n + 1, n + 1);
  cmat.topLeftCorner(n, n) = sub.cmat;
  cmat.noalias() += b * s * s.transpose();

  if (r.size() > 0) {
    const VectorXd lambda = sr / gp_var;
    sub.theta_mean += lambda * (gp_mean - y);
    MatrixXd cov = sub.theta_cov - sr * sr.transpose() / gp_var;
    sub.theta_cov = 0.5 * (cov + cov.transpose());
  }

  sub.pool.conservativeResize(Eigen::NoChange, n + 1);
  sub.pool.col(n) = xi;
  sub.labels.conservativeResize(n + 1);
  sub.labels(n) = y;
  sub.alpha = std::move(alpha);
  sub.beta = std::move(beta);
  sub.cmat = std::move(cmat);
  sub.refresh();
  return sub;
}

VectorXd elimination_scores(const SubsystemGP& sub) {
  const Index n = sub.size();
  if (n == 0) throw InternalStateError("elimination_scores: empty pool");
  VectorXd scores(n);
  for (Index j = 0; j < n; ++j) {
    const double cjj = sub.cmat(j, j);
    if (!(cjj > 0.0) || !std::isfinite(cjj)) {
      std::ostringstream os;
      os << "elimination_scores: inverse-Gram diagonal " << j << " is " << cjj;
      throw InternalStateError(os.str());
    }
    scores(j) = std::abs(sub.mean_weights(j)) / cjj;
  }
  return scores;
}

SubsystemGP remove(SubsystemGP sub, Index m) {
  const Index n = sub.size();
  if (m < 0 || m >= n) throw DimensionError("remove: pool index out of range");
  const double cmm = sub.cmat(m, m);
  if (!(cmm > 0.0)) throw InternalStateError("remove: non-positive inverse-Gram diagonal");
  const VectorXd q = drop_entry(sub.cmat.col(m), m);

  VectorXd alpha = drop_entry(sub.alpha, m) - q * (sub.alpha(m) / cmm);
  MatrixXd beta = drop_row(sub.beta, m);
  beta.noalias() -= q * (sub.beta.row(m) / cmm);
  MatrixXd cmat = drop_row_col(sub.cmat, m);
  cmat.noalias() -= q * q.transpose() / cmm;

  MatrixXd pool(sub.pool.rows(), n - 1);
  pool.leftCols(m) = sub.pool.leftCols(m);
  pool.rightCols(n - m - 1) = sub.pool.rightCols(n - m - 1);

  sub.pool = std::move(pool);
  sub.labels = drop_entry(sub.labels, m);
  sub.alpha = std::move(alpha);
  sub.beta = std::move(beta);
  sub.cmat = 0.5 * (cmat + cmat.transpose());
  sub.refresh();
  return sub;
}

double variance_bound(const SubsystemGP& sub) {
  double bound = sub.kernel.amplitude + sub.kernel.noise;
  if (sub.basis.n_theta() > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub.prior.cov, Eigen::EigenvaluesOnly);
    const double phi_bar = sub.basis.bound();
    bound += es.eigenvalues().maxCoeff() * phi_bar * phi_bar;
  }
  return bound;
}

Index lowest_score_index(const VectorXd& scores) {
  Index best = 0;
  for (Index j = 1; j < scores.size(); ++j)
    if (scores(j) < scores(best)) best = j;
  return best;
}

MeanCov ModelGP::predict(const VectorXd& xi) const {
  const Index nx = state_dim();
  MeanCov out{VectorXd(nx), MatrixXd::Zero(nx, nx)};
  for (Index i = 0; i < nx; ++i) {
    const Prediction p = dualmpc::predict(subsystems[static_cast<std::size_t>(i)], xi);
    out.mean(i) = p.mean;
    out.cov(i, i) = p.var;
  }
  return out;
}

void ModelGP::validate() const {
  if (subsystems.empty()) throw ConfigError("model has no output dimensions");
  for (const auto& s : subsystems)
    if (s.input_dim() != input_dim()) throw DimensionError("subsystems disagree on n_xi");
}

ModelGP fit_model(const MatrixXd& features, const MatrixXd& next_states,
                  const std::vector<KernelParams>& kernels, const std::vector<BasisSpec>& bases,
                  const std::vector<ParametricPrior>& priors, std::size_t budget) {
  const std::size_t nx = static_cast<std::size_t>(next_states.rows());
  if (kernels.size() != nx || bases.size() != nx || priors.size() != nx)
    throw DimensionError("fit_model: one kernel, basis and prior per output dimension");
  if (next_states.cols() != features.cols()) throw DimensionError("fit_model: sample count mismatch");
  ModelGP model;
  model.subsystems.reserve(nx);
  for (std::size_t i = 0; i < nx; ++i)
    model.subsystems.push_back(batch_fit(features, next_states.row(static_cast<Index>(i)).transpose(),
                                         kernels[i], bases[i], priors[i], budget));
  return model;
}

ModelGP gp_update(ModelGP model, const VectorXd& xi, const VectorXd& x_next, GpUpdateStats* stats,
                  Execution exec) {
  const Index nx = model.state_dim();
  if (x_next.size() != nx) throw DimensionError("gp_update: state dimension mismatch");
  std::vector<int> skipped(static_cast<std::size_t>(nx), 0);
  std::vector<int> removed(static_cast<std::size_t>(nx), 0);
  for_each_index(nx, exec, [&](std::ptrdiff_t i) {
    auto& sub = model.subsystems[static_cast<std::size_t>(i)];
    try {
      sub = include(sub, xi, x_next(i));
    } catch (const DegenerateInclusion&) {
      skipped[static_cast<std::size_t>(i)] = 1;
      return;
    }
    if (static_cast<std::size_t>(sub.size()) > sub.budget) {
      const Index m = lowest_score_index(elimination_scores(sub));
      sub = remove(std::move(sub), m);
      removed[static_cast<std::size_t>(i)] = 1;
    }
  });
  if (stats) {
    for (Index i = 0; i < nx; ++i) {
      stats->skipped += skipped[static_cast<std::size_t>(i)];
      stats->removed += removed[static_cast<std::size_t>(i)];
    }
  }
  return model;
}

}  // namespace dualmpc
