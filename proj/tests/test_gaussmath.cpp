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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "dualmpc/errors.hpp"
#include "dualmpc/gaussmath.hpp"
#include "test_util.hpp"

namespace dualmpc {
namespace {

using testing::random_matrix;
using testing::random_spd;
using testing::random_vector;

double normal_moment(int k) {
  if (k % 2) return 0.0;
  double m = 1.0;
  for (int j = k - 1; j > 1; j -= 2) m *= j;
  return m;
}

void for_each_multi_index(int n, int max_degree, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int d, int left) {
    if (d == n) {
      fn(idx);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      idx[static_cast<std::size_t>(d)] = k;
      rec(d + 1, left - k);
    }
    idx[static_cast<std::size_t>(d)] = 0;
  };
  rec(0, max_degree);
}

double rule_moment(const SigmaPointSet& sp, const std::vector<int>& idx) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < sp.size(); ++j) {
    double term = sp.weights(j);
    for (int d = 0; d < sp.dim; ++d) term *= std::pow(sp.points(d, j), idx[static_cast<std::size_t>(d)]);
    acc += term;
  }
  return acc;
}

class Ut5Dims : public ::testing::TestWithParam<int> {};

TEST_P(Ut5Dims, ReproducesAllMomentsThroughDegreeFive) {
  const int n = GetParam();
  const auto sp = ut5_unit_points(n);
  EXPECT_EQ(sp.size(), 2 * n * n + 1);
  EXPECT_NEAR(sp.weights.sum(), 1.0, 1e-14);
  double worst = 0.0;
  for_each_multi_index(n, 5, [&](const std::vector<int>& idx) {
    double exact = 1.0;
    for (int k : idx) exact *= normal_moment(k);
    worst = std::max(worst, std::abs(rule_moment(sp, idx) - exact));
  });
  EXPECT_LE(worst, 1e-8);
}

TEST_P(Ut5Dims, SixthMomentIsNotExact) {
  const int n = GetParam();
  const auto sp = ut5_unit_points(n);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  idx[0] = 6;
  EXPECT_GT(std::abs(rule_moment(sp, idx) - 15.0), 1e-3);
}

TEST_P(Ut5Dims, MomentReportAgreesWithDirectCheck) {
  const auto errs = moment_errors(ut5_unit_points(GetParam()), 6);
  ASSERT_EQ(errs.size(), 7u);
  for (int d = 0; d <= 5; ++d) EXPECT_LE(errs[static_cast<std::size_t>(d)], 1e-8) << d;
  EXPECT_GT(errs[6], 1e-3);
}

INSTANTIATE_TEST_SUITE_P(Dims, Ut5Dims, ::testing::Values(1, 2, 3, 8));

TEST(Ut5, RejectsZeroDimension) { EXPECT_THROW(ut5_unit_points(0), DimensionError); }

TEST(Ut5, CenterPointComesFirst) {
  const auto sp = ut5_unit_points(3);
  EXPECT_EQ(sp.points.col(0).norm(), 0.0);
}

TEST(CholPsd, ExactForPositiveDefinite) {
  std::mt19937_64 rng(1);
  const MatrixXd s = random_spd(rng, 4);
  const auto c = chol_psd(s);
  EXPECT_EQ(c.jitter, 0.0);
  EXPECT_LE((c.lower * c.lower.transpose() - s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CholPsd, ZeroMatrixNeedsJitter) {
  const auto c = chol_psd(MatrixXd::Zero(3, 3));
  EXPECT_GT(c.jitter, 0.0);
  EXPECT_LE(c.jitter, 1e-10);
}

TEST(CholPsd, IndefiniteInputFails) {
  MatrixXd s = MatrixXd::Identity(2, 2);
  s(1, 1) = -1.0;
  EXPECT_THROW(chol_psd(s), NotPositiveSemidefinite);
}

TEST(MomentMatch, LinearMapIsExact) {
  std::mt19937_64 rng(2);
  const MatrixXd a = random_matrix(rng, 3, 4);
  const VectorXd b = random_vector(rng, 3);
  const MatrixXd q = random_spd(rng, 3);
  const GaussianBelief in(random_vector(rng, 4), random_spd(rng, 4));
  const auto sp = ut5_unit_points(4);
  for (auto exec : {Execution::kSerial, Execution::kParallel}) {
    const auto out = moment_match([&](const VectorXd& x) { return MeanCov{a * x + b, q}; }, in, sp, exec);
    EXPECT_LE((out.mean - (a * in.mean + b)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((out.cov - (a * in.cov * a.transpose() + q)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(MomentMatch, SerialAndParallelAgreeBitwise) {
  std::mt19937_64 rng(3);
  const GaussianBelief in(random_vector(rng, 3), random_spd(rng, 3));
  const auto sp = ut5_unit_points(3);
  auto f = [](const VectorXd& x) {
    VectorXd m(2);
    m << std::sin(x(0)) * x(1), std::exp(0.1 * x(2));
    return MeanCov{m, 0.01 * MatrixXd::Identity(2, 2)};
  };
  const auto s = moment_match(f, in, sp, Execution::kSerial);
  const auto p = moment_match(f, in, sp, Execution::kParallel);
  EXPECT_TRUE(s.mean == p.mean);
  EXPECT_TRUE(s.cov == p.cov);
}

TEST(MomentMatch, SinOfGaussianMatchesClosedForm) {
  // E[sin x] = sin(mu) exp(-s/2) for x ~ N(mu, s); degree-5 rule is close for small s.
  const GaussianBelief in(VectorXd::Constant(1, 0.3), MatrixXd::Constant(1, 1, 0.04));
  const auto out = moment_match(
      [](const VectorXd& x) { return MeanCov{x.array().sin().matrix(), MatrixXd::Zero(1, 1)}; }, in,
      ut5_unit_points(1));
  EXPECT_NEAR(out.mean(0), std::sin(0.3) * std::exp(-0.02), 1e-6);
}

TEST(MomentMatch, NonFiniteOutputRaises) {
  const GaussianBelief in(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  auto bad = [](const VectorXd&) { return MeanCov{VectorXd::Constant(1, NAN), MatrixXd::Zero(1, 1)}; };
  EXPECT_THROW(moment_match(bad, in, ut5_unit_points(1)), NumericalError);
}

TEST(Expectation, QuadraticFormClosedForm) {
  std::mt19937_64 rng(4);
  const MatrixXd w = random_spd(rng, 3);
  const GaussianBelief in(random_vector(rng, 3), random_spd(rng, 3));
  const double got =
      expectation([&](const VectorXd& x) { return x.dot(w * x); }, in, ut5_unit_points(3));
  EXPECT_NEAR(got, in.mean.dot(w * in.mean) + (w * in.cov).trace(), 1e-10);
}

TEST(SymmetrizeClip, RemovesNegativeEigenvalues) {
  MatrixXd s(2, 2);
  s << 1.0, 0.0, 0.0, -1e-6;
  const MatrixXd c = symmetrize_clip(s);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
}

}  // namespace
}  // namespace dualmpc
