#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "robust_filter/adversary.hpp"
#include "robust_filter/scenario.hpp"

using namespace robust_filter;

namespace {

std::vector<std::vector<double>> sorted_rows(const MatrixXd& x) {
  std::vector<std::vector<double>> rows;
  for (Index i = 0; i < x.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(x.cols()));
    for (Index j = 0; j < x.cols(); ++j) r[static_cast<std::size_t>(j)] = x(i, j);
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

InlierModel standard(Index d) { return InlierModel::gaussian(VectorXd::Zero(d), MatrixXd::Identity(d, d)); }

}  // namespace

TEST(Corrupt, ZeroEpsilonIsAPermutationOfInliers) {
  RngStream a(1, 0), b(1, 0);
  SampleSet s = corrupt(standard(3), NoiseModel::all_zeros(), 500, 0.0, a);
  SampleSet clean = sample_inliers(standard(3), 500, b);
  EXPECT_EQ(s.count(Label::Outlier), 0);
  EXPECT_EQ(sorted_rows(s.data()), sorted_rows(clean.data()));
}

TEST(Corrupt, OutlierCountHasBinomialMean) {
  RngStream r(2, 0);
  const int reps = 10000;
  double total = 0;
  for (int k = 0; k < reps; ++k) total += static_cast<double>(corrupt(standard(1), NoiseModel::all_zeros(), 1000, 0.1, r).count(Label::Outlier));
  EXPECT_NEAR(total / reps, 100.0, 1.0);
}

TEST(Corrupt, LabelsMarkExactlyTheNoiseRows) {
  RngStream r(3, 0);
  VectorXd p = VectorXd::Constant(4, 7.0);
  SampleSet s = corrupt(standard(4), NoiseModel::point_mass(p), 2000, 0.2, r);
  for (Index i = 0; i < s.size(); ++i) {
    const bool at_p = s.data().row(i).transpose() == p;
    EXPECT_EQ(at_p, s.labels()[static_cast<std::size_t>(i)] == Label::Outlier);
  }
  EXPECT_GT(s.count(Label::Outlier), 0);
}

TEST(Corrupt, SameSeedSameOutput) {
  RngStream a(4, 9), b(4, 9);
  SampleSet x = corrupt(standard(5), NoiseModel::hypercube_mixture(), 300, 0.1, a);
  SampleSet y = corrupt(standard(5), NoiseModel::hypercube_mixture(), 300, 0.1, b);
  EXPECT_EQ(x.data(), y.data());
  EXPECT_EQ(x.labels(), y.labels());
}

TEST(Corrupt, RejectsBadEpsilon) {
  RngStream r(5, 0);
  EXPECT_THROW(corrupt(standard(2), NoiseModel::all_zeros(), 10, 0.5, r), InvalidArgument);
  EXPECT_THROW(corrupt(standard(2), NoiseModel::all_zeros(), 10, -0.1, r), InvalidArgument);
}

TEST(Shuffle, PreservesMultiset) {
  RngStream r(6, 0);
  std::vector<int> v(1000);
  for (int i = 0; i < 1000; ++i) v[static_cast<std::size_t>(i)] = i % 37;
  std::vector<int> w = v;
  r.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, w);
}

TEST(Noise, HypercubeMixtureSupportAndMoments) {
  RngStream r(7, 0);
  const int n = 100000, d = 4;
  VectorXd sum = VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    VectorXd x = sample_hypercube_mixture(d, r);
    EXPECT_TRUE(x(0) == 0 || x(0) == 1 || x(0) == 12);
    EXPECT_TRUE(x(1) == 0 || x(1) == 1 || x(1) == -2);
    for (int j = 2; j < d; ++j) EXPECT_TRUE(x(j) == 0 || x(j) == 1);
    sum += x;
  }
  sum /= n;
  // Means: (0.5 * 0.5 + 0.5 * 6, 0.5 * 0.5 - 0.5 * 1, 0.25, 0.25).
  EXPECT_NEAR(sum(0), 3.25, 0.06);
  EXPECT_NEAR(sum(1), -0.25, 0.015);
  EXPECT_NEAR(sum(2), 0.25, 0.01);
  EXPECT_NEAR(sum(3), 0.25, 0.01);
}

TEST(Noise, SkewedUnrotatedCoordinateVariances) {
  RngStream r(8, 0);
  const int n = 200000, d = 6;
  VectorXd s1 = VectorXd::Zero(d), s2 = VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    VectorXd y = skewed_noise_unrotated(d, r);
    s1 += y;
    s2 += y.cwiseProduct(y);
  }
  const VectorXd var = s2 / n - (s1 / n).cwiseProduct(s1 / n);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(var(j), 1.0 / 6.0, 0.005);
  for (int j = 3; j < 5; ++j) EXPECT_NEAR(var(j), 0.64 * 2.0, 0.03);
  EXPECT_NEAR(var(5), (201.0 * 201.0 - 1.0) / 12.0, 50.0);
}

TEST(Noise, SkewedRotationPreservesNorm) {
  RngStream r(9, 0);
  const MatrixXd q = haar_rotation(8, r);
  EXPECT_LT((q.transpose() * q - MatrixXd::Identity(8, 8)).norm(), 1e-12);
  for (int k = 0; k < 100; ++k) {
    RngStream a(10, static_cast<std::uint64_t>(k)), b(10, static_cast<std::uint64_t>(k));
    EXPECT_NEAR(sample_skewed_cov_noise(8, q, a).norm(), skewed_noise_unrotated(8, b).norm(), 1e-9);
  }
  EXPECT_THROW(skewed_noise_unrotated(7, r), InvalidArgument);
}

TEST(Noise, HaarFirstColumnIsUniformOnSphere) {
  RngStream r(11, 0);
  const int reps = 20000, d = 3;
  double m = 0, sq = 0;
  for (int k = 0; k < reps; ++k) {
    const double v = haar_rotation(d, r)(0, 0);
    m += v;
    sq += v * v;
  }
  EXPECT_NEAR(m / reps, 0.0, 0.02);
  EXPECT_NEAR(sq / reps, 1.0 / d, 0.01);
}

TEST(Noise, EuropeSupportAndMean) {
  RngStream r(12, 0);
  const int n = 100000, d = 4;
  VectorXd sum = VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    const VectorXd raw = sample_europe_noise(d, r);
    const VectorXd x = (raw * 24.0).array().round().matrix();
    EXPECT_LT((raw * 24.0 - x).cwiseAbs().maxCoeff(), 1e-12);
    for (int j = 0; j < 2; ++j) EXPECT_TRUE(x(j) == 0 || x(j) == 1 || x(j) == 2);
    for (int j = 2; j < 4; ++j) EXPECT_TRUE(x(j) == 2 || x(j) == 3);
    sum += raw;
  }
  sum /= n;
  EXPECT_NEAR(sum(0), 1.0 / 24.0, 0.001);
  EXPECT_NEAR(sum(3), 2.5 / 24.0, 0.001);
}

TEST(Inliers, SpikedGaussianCovariance) {
  RngStream r(13, 0);
  InlierSpec spec;
  spec.spike_scale = 10.0;
  const InlierModel m = build_inliers(spec, 5);
  const MatrixXd x = sample_inliers(m, 100000, r).data();
  const MatrixXd c = x.transpose() * x / 100000.0;
  EXPECT_NEAR(c(0, 0), 11.0, 0.25);
  MatrixXd rest = c - m.population_covariance();
  rest(0, 0) = 0;
  EXPECT_LT(rest.cwiseAbs().maxCoeff(), 0.06);
}

TEST(Inliers, HeavyTailVariance) {
  RngStream r(14, 0);
  const InlierModel m = InlierModel::bounded_second_moment(VectorXd::Constant(3, 1.0), 2.0);
  const MatrixXd x = sample_inliers(m, 200000, r).data();
  const VectorXd mu = x.colwise().mean();
  EXPECT_LT((mu - VectorXd::Constant(3, 1.0)).cwiseAbs().maxCoeff(), 0.02);
  const MatrixXd c = second_moment_about(x, mu);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(c(j, j), 2.4, 0.1);
  EXPECT_LT((c - m.population_covariance()).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_LE(jacobi_eigen(m.population_covariance()).values(2), 4.0);
}

TEST(Scenario, RotationDependsOnlyOnSeedAndDim) {
  EXPECT_EQ(experiment_rotation(1, 6), experiment_rotation(1, 6));
  EXPECT_NE(experiment_rotation(1, 6), experiment_rotation(2, 6));
  EXPECT_THROW(build_noise(NoiseSpec{"nope", 1.0}, 4, 1), InvalidArgument);
}
