#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "robust_filter/spectral.hpp"

using namespace robust_filter;

TEST(Jacobi, MatchesEigenSolverOnRandomSymmetric) {
  RngStream r(1, 0);
  for (int d : {1, 2, 5, 12, 30}) {
    MatrixXd m = oracle::random_symmetric(d, r);
    SymmetricEigen e = jacobi_eigen(m);
    Eigen::SelfAdjointEigenSolver<MatrixXd> ref(m);
    EXPECT_LT((e.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((m * e.vectors - e.vectors * e.values.asDiagonal()).norm(), 1e-10);
    EXPECT_LT((e.vectors.transpose() * e.vectors - MatrixXd::Identity(d, d)).norm(), 1e-12);
  }
}

TEST(TopEigenpair, IdentityIsImmediate) {
  RngStream r(2, 0);
  EigenPair e = top_eigenpair(MatrixXd::Identity(6, 6), {}, r);
  EXPECT_NEAR(e.value, 1.0, 1e-15);
  EXPECT_LE(e.residual, 1e-15);
  EXPECT_NEAR(e.vector.norm(), 1.0, 1e-12);
  EXPECT_TRUE(e.converged);
}

TEST(TopEigenpair, NegativeDominantValue) {
  RngStream r(3, 0);
  MatrixXd m = VectorXd((VectorXd(3) << 3, 1, -5).finished()).asDiagonal();
  EigenPair e = top_eigenpair(m, {}, r);
  EXPECT_NEAR(e.value, -5.0, 1e-6);
  EXPECT_NEAR(std::abs(e.vector(2)), 1.0, 1e-6);
}

TEST(TopEigenpair, PlusMinusTieResolvedByShift) {
  RngStream r(4, 0);
  MatrixXd m = VectorXd((VectorXd(3) << 2, -2, 0.5).finished()).asDiagonal();
  EigenPair e = top_eigenpair(m, {}, r);
  EXPECT_TRUE(e.converged);
  EXPECT_NEAR(std::abs(e.value), 2.0, 1e-6);
  EXPECT_LE(e.residual, 1e-7 * 2.0);
}

TEST(TopEigenpair, MatchesDenseOracleOnRandomMatrices) {
  RngStream r(5, 0);
  for (int t = 0; t < 30; ++t) {
    MatrixXd m = oracle::random_symmetric(10, r);
    auto [val, vec] = oracle::dominant_eigen(m);
    EigenPair e = top_eigenpair(m, {1e-10, 20000}, r);
    EXPECT_NEAR(e.value, val, 1e-6);
    EXPECT_GT(std::abs(e.vector.dot(vec)), 1 - 1e-4);
    EXPECT_NEAR(e.vector.norm(), 1.0, 1e-12);
  }
}

TEST(TopEigenpair, NegationFlipsValue) {
  RngStream gen(6, 0);
  for (int t = 0; t < 50; ++t) {
    MatrixXd m = oracle::random_symmetric(8, gen);
    RngStream r1(7, t), r2(7, t);
    EigenPair a = top_eigenpair(m, {1e-10, 20000}, r1);
    EigenPair b = top_eigenpair(MatrixXd(-m), {1e-10, 20000}, r2);
    EXPECT_NEAR(a.value, -b.value, 1e-8 * std::max(1.0, std::abs(a.value)));
    EXPECT_GT(std::abs(a.vector.dot(b.vector)), 1 - 1e-6);
  }
}

TEST(TopEigenpair, ReportsNonConvergence) {
  RngStream r(8, 0);
  MatrixXd m = VectorXd((VectorXd(3) << 1.0, 0.999999, 0.1).finished()).asDiagonal();
  EigenPair e = top_eigenpair(m, {1e-14, 5}, r);
  EXPECT_FALSE(e.converged);
  EXPECT_TRUE(std::isfinite(e.residual));
}

TEST(TopEigenpair, StalledRunKeepsDominantMagnitude) {
  // PSD with a null space: the -M + rho I run heads for eigenvalue 0, which
  // must not replace the stalled estimate of the top eigenvalue.
  RngStream r(9, 0);
  VectorXd diag = VectorXd::Zero(8);
  diag(0) = 1.0;
  diag(1) = 0.99999;
  MatrixXd m = diag.asDiagonal();
  EigenPair e = top_eigenpair(m, {1e-12, 50}, r);
  EXPECT_FALSE(e.converged);
  EXPECT_GT(e.value, 0.99);
  RngStream r2(9, 0);
  EigenPair p = top_eigenpair(m, {1e-12, 50}, r2, true);
  EXPECT_GT(p.value, 0.99);
  EXPECT_EQ(p.iterations, 50);
}

TEST(Lanczos, SmallExamples) {
  RngStream r(10, 0);
  EigenPair id = top_eigenpair_lanczos(MatrixXd(MatrixXd::Identity(4, 4)), {}, r);
  EXPECT_TRUE(id.converged);
  EXPECT_NEAR(id.value, 1.0, 1e-12);
  MatrixXd m = VectorXd((VectorXd(3) << 3, 1, -5).finished()).asDiagonal();
  EigenPair e = top_eigenpair_lanczos(m, {}, r);
  EXPECT_TRUE(e.converged);
  EXPECT_NEAR(e.value, -5.0, 1e-9);
  EXPECT_NEAR(std::abs(e.vector(2)), 1.0, 1e-9);
}

TEST(Lanczos, MatchesDenseOracleOnRandomMatrices) {
  RngStream r(11, 0);
  for (int t = 0; t < 30; ++t) {
    const int d = 5 + t;
    MatrixXd m = oracle::random_symmetric(d, r);
    auto [val, vec] = oracle::dominant_eigen(m);
    EigenPair e = top_eigenpair_lanczos(m, {1e-10, 5000}, r, 10);
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.value, val, 1e-6 * std::max(1.0, std::abs(val)));
    EXPECT_GT(std::abs(e.vector.dot(vec)), 1 - 1e-4);
    EXPECT_NEAR(e.vector.norm(), 1.0, 1e-12);
    EXPECT_LE(e.residual, 1e-10 * std::max(1.0, std::abs(e.value)));
  }
}

TEST(Lanczos, FourthMomentTopMatchesDenseOracle) {
  RngStream r(12, 0);
  for (int d = 2; d <= 6; ++d) {
    MatrixXd y = oracle::random_matrix(40, d, r);
    FourthMomentOperator op(y);
    auto [val, vec] = oracle::dominant_eigen(oracle::dense_fourth_moment(y));
    EigenPair e = top_eigenpair_lanczos([&](const VectorXd& in, VectorXd& out) { op.apply(in, out); }, d * d,
                                        {1e-10, 5000}, r);
    EXPECT_NEAR(e.value, val, 1e-6 * std::max(1.0, std::abs(val)));
  }
}

TEST(Lanczos, BudgetExhaustionIsReported) {
  RngStream r(13, 0);
  MatrixXd m = oracle::random_symmetric(60, r);
  EigenPair e = top_eigenpair_lanczos(m, {1e-14, 6}, r, 3);
  EXPECT_FALSE(e.converged);
  EXPECT_LE(e.iterations, 8);
  EXPECT_TRUE(std::isfinite(e.residual));
}

TEST(InverseSqrt, Examples) {
  EXPECT_LT((inverse_sqrt(MatrixXd::Identity(3, 3)) - MatrixXd::Identity(3, 3)).norm(), 1e-15);
  MatrixXd d = VectorXd((VectorXd(2) << 4, 9).finished()).asDiagonal();
  MatrixXd r = inverse_sqrt(d);
  EXPECT_NEAR(r(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-15);
}

TEST(InverseSqrt, RandomPositiveDefinite) {
  RngStream g(9, 0);
  for (int t = 0; t < 10; ++t) {
    MatrixXd b = oracle::random_matrix(8, 8, g);
    MatrixXd m = b * b.transpose() + 0.1 * MatrixXd::Identity(8, 8);
    MatrixXd r = inverse_sqrt(m);
    EXPECT_LT((r * m * r - MatrixXd::Identity(8, 8)).norm(), 1e-8);
    EXPECT_LT((r - r.transpose()).norm(), 1e-14);
    EXPECT_LT((r * m - m * r).norm(), 1e-8 * m.norm());
    EXPECT_GT(jacobi_eigen(r).values(0), 0.0);
  }
}

TEST(InverseSqrt, SingularNamesEigenvalue) {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = 1.0;
  try {
    inverse_sqrt(m);
    FAIL();
  } catch (const SingularMatrix& e) {
    EXPECT_NEAR(e.eigenvalue(), 0.0, 1e-15);
    EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos);
  }
}

TEST(FlattenSharpen, Examples) {
  VectorXd f = flatten(MatrixXd::Identity(2, 2));
  EXPECT_EQ(f, (VectorXd(4) << 1, 0, 0, 1).finished());
  MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(flatten(m), (VectorXd(6) << 1, 2, 3, 4, 5, 6).finished());
  RngStream r(10, 0);
  MatrixXd a = oracle::random_matrix(5, 5, r);
  EXPECT_EQ(sharpen(flatten(a)), a);
  MatrixXd b1 = oracle::random_matrix(4, 4, r), b2 = oracle::random_matrix(4, 4, r);
  EXPECT_NEAR(flatten(b1).dot(flatten(b2)), (b1.transpose() * b2).trace(), 1e-12);
  EXPECT_THROW(sharpen(VectorXd::Zero(5)), DimensionMismatch);
}

TEST(FourthMoment, SingleSampleHandComputation) {
  const int d = 3;
  MatrixXd y = MatrixXd::Zero(1, d);
  y(0, 0) = 1.0;
  FourthMomentOperator op(y);
  VectorXd out = op(flatten(MatrixXd::Identity(d, d)));
  VectorXd z = VectorXd::Zero(d * d);
  z(0) = 1.0;
  VectorXd expected = -static_cast<double>(d) * flatten(MatrixXd::Identity(d, d)) + z;
  EXPECT_LT((out - expected).norm(), 1e-15);
}

TEST(FourthMoment, MatchesDenseOracleOnSmallInstances) {
  RngStream r(11, 0);
  for (int d = 1; d <= 4; ++d) {
    for (int n : {1, 7, 30}) {
      MatrixXd y = oracle::random_matrix(n, d, r);
      MatrixXd dense = oracle::dense_fourth_moment(y);
      FourthMomentOperator op(y);
      for (int k = 0; k < 3; ++k) {
        VectorXd w = oracle::random_matrix(d * d, 1, r);
        EXPECT_LT((op(w) - dense * w).norm(), 1e-10 * std::max(1.0, (dense * w).norm()));
      }
    }
  }
  MatrixXd y = oracle::random_matrix(20, 3, r);
  FourthMomentOperator op(y);
  EXPECT_LT((op(VectorXd::Unit(9, 4)) - oracle::dense_fourth_moment(y).col(4)).norm(), 1e-10);
}

TEST(FourthMoment, SymmetricOperator) {
  RngStream r(12, 0);
  MatrixXd y = oracle::random_matrix(50, 5, r);
  FourthMomentOperator op(y);
  for (int k = 0; k < 10; ++k) {
    VectorXd u = oracle::random_matrix(25, 1, r), w = oracle::random_matrix(25, 1, r);
    EXPECT_NEAR(u.dot(op(w)), w.dot(op(u)), 1e-9);
  }
}

TEST(VarianceOfQuadratic, ClosedFormExamples) {
  MatrixXd e11 = MatrixXd::Zero(4, 4);
  e11(0, 0) = 1;
  EXPECT_DOUBLE_EQ(variance_of_quadratic(e11), 1.0);
  EXPECT_DOUBLE_EQ(variance_of_quadratic(MatrixXd::Identity(7, 7)), 7.0);
  RngStream r(13, 0);
  MatrixXd m = oracle::random_matrix(6, 6, r);
  EXPECT_EQ(variance_of_quadratic(m), variance_of_quadratic(MatrixXd(m.transpose())));
}

TEST(VarianceOfQuadratic, MatchesMonteCarlo) {
  RngStream r(14, 0);
  MatrixXd m = oracle::random_matrix(6, 6, r);
  const int n = 1000000;
  double s = 0, s2 = 0;
  const double tr = m.trace();
  VectorXd y(6);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 6; ++j) y(j) = r.normal();
    const double p = (y.dot(m * y) - tr) / std::sqrt(2.0);
    s += p;
    s2 += p * p;
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var / variance_of_quadratic(m), 1.0, 0.01);
}
