#include "flatscan/minresqlp.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "flatscan/diagnostics.hpp"
#include "test_support.hpp"

using namespace flatscan;

namespace {

SolverConfig tight() {
  SolverConfig cfg;
  cfg.rtol = 1e-12;
  return cfg;
}

ParamVector vec2(double x, double y) {
  ParamVector v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST(MrqlpSolve, IdentitySystem) {
  const DenseSymMatrix h(Eigen::MatrixXd::Identity(2, 2));
  const KrylovSolution sol = mrqlp_solve(h, vec2(3, 4), tight());
  EXPECT_LT((sol.step - vec2(-3, -4)).norm(), 1e-12);
  EXPECT_LT(sol.rel_residual, 1e-12);
  EXPECT_EQ(sol.stop_reason, KrylovSolution::StopReason::rtol_r);
}

TEST(MrqlpSolve, MixedRangeKernelSystem) {
  Eigen::Matrix2d m;
  m << 2.0, 0.0, 0.0, 0.0;
  const DenseSymMatrix h(m);
  SolverConfig cfg;  // paper-scale tolerance
  const KrylovSolution sol = mrqlp_solve(h, vec2(4, 3), cfg);
  EXPECT_LT((sol.step - vec2(-2, 0)).norm(), 1e-10);
  EXPECT_NEAR(sol.rel_residual, 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(sol.cokernel_residual, 0.0, 1e-12);
  EXPECT_EQ(sol.stop_reason, KrylovSolution::StopReason::rtol_rH);
  EXPECT_EQ(sol.hnorm, 2.0);
  EXPECT_FALSE(sol.hnorm_is_estimate);
}

TEST(MrqlpSolve, GradientEntirelyInKernel) {
  Eigen::Matrix2d m;
  m << 0.0, 0.0, 0.0, 10.0;
  const DenseSymMatrix h(m);
  const KrylovSolution sol =
      mrqlp_solve(h, vec2(9.0 - 4.0 * std::sqrt(2.0), 0.0), SolverConfig{});
  EXPECT_EQ(sol.step[0], 0.0);
  EXPECT_EQ(sol.step[1], 0.0);
  EXPECT_EQ(sol.rel_residual, 1.0);
  EXPECT_EQ(sol.cokernel_residual, 0.0);
  EXPECT_EQ(sol.stop_reason, KrylovSolution::StopReason::rtol_rH);
}

TEST(MrqlpSolve, ZeroRhs) {
  const DenseSymMatrix h(Eigen::MatrixXd::Identity(3, 3));
  const KrylovSolution sol = mrqlp_solve(h, ParamVector::Zero(3), tight());
  EXPECT_EQ(sol.step.norm(), 0.0);
  EXPECT_EQ(sol.rel_residual, 0.0);
  EXPECT_EQ(sol.iterations, 0);
}

TEST(MrqlpSolve, ZeroOperator) {
  const DenseSymMatrix h(Eigen::MatrixXd::Zero(3, 3));
  const KrylovSolution sol = mrqlp_solve(h, ParamVector::Ones(3), tight());
  EXPECT_EQ(sol.step.norm(), 0.0);
  EXPECT_EQ(sol.rel_residual, 1.0);  // zero step against nonzero gradient
  EXPECT_EQ(sol.cokernel_residual, 0.0);
}

TEST(MrqlpSolve, OracleAgreementAcrossRanks) {
  // Seeded random symmetric systems with 0/25/50% rank deficiency; the
  // solver run to maxit = n at rtol 1e-12 must match the pseudoinverse
  // minimum-norm solution and its residuals must match the diagnostics
  // module recomputation.
  Rng rng(1234);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 10 + static_cast<int>(rng.below(91));
    const int deficiency_pct = 25 * static_cast<int>(trial % 3);
    const int zero_modes = n * deficiency_pct / 100;
    const DenseSymMatrix h(
        testutil::random_symmetric_with_rank(n, zero_modes, rng));
    const ParamVector g = testutil::random_vector(n, rng);
    const KrylovSolution sol = mrqlp_solve(h, g, tight());
    const ParamVector oracle = pinv_solve(h, -g);
    EXPECT_LT((sol.step - oracle).norm(), 1e-6 * (1.0 + oracle.norm()))
        << "n=" << n << " deficiency=" << deficiency_pct << "%";
    EXPECT_NEAR(sol.rel_residual, relative_residual(h, sol.step, g), 1e-10);
    EXPECT_NEAR(sol.cokernel_residual, cokernel_residual(h, sol.step, g),
                1e-10);
    EXPECT_LE(sol.iterations, n);
    EXPECT_GE(sol.rel_residual, 0.0);
    EXPECT_LE(sol.rel_residual, 1.0);
    ++checked;
  }
  EXPECT_EQ(checked, 60);
}

TEST(MrqlpSolve, OperatorModeMatchesOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(40));
    const Eigen::MatrixXd m =
        testutil::random_symmetric_with_rank(n, n / 4, rng);
    const ParamVector g = testutil::random_vector(n, rng);
    const LinearOperator op = [&m](const ParamVector& v) {
      return ParamVector(m * v);
    };
    const KrylovSolution sol = mrqlp_solve(op, n, g, tight());
    const ParamVector oracle = pinv_solve(DenseSymMatrix(m), -g);
    EXPECT_LT((sol.step - oracle).norm(), 1e-6 * (1.0 + oracle.norm()));
    EXPECT_TRUE(sol.hnorm_is_estimate);
    // Lanczos estimate is a lower bound on the Frobenius norm.
    EXPECT_LE(sol.hnorm, DenseSymMatrix(m).matrix().norm() * (1 + 1e-12));
  }
}

TEST(MrqlpSolve, MaxitCapRespected) {
  Rng rng(7);
  const int n = 60;
  const DenseSymMatrix h(testutil::random_symmetric_with_rank(n, 0, rng));
  const ParamVector g = testutil::random_vector(n, rng);
  SolverConfig cfg = tight();
  cfg.maxit = 3;
  const KrylovSolution sol = mrqlp_solve(h, g, cfg);
  EXPECT_LE(sol.iterations, 3);
  EXPECT_EQ(sol.stop_reason, KrylovSolution::StopReason::maxit);
}

TEST(MrqlpSolve, NanAborts) {
  const LinearOperator bad = [](const ParamVector& v) {
    ParamVector out = v;
    out[0] = std::nan("");
    return out;
  };
  EXPECT_THROW(mrqlp_solve(bad, 3, ParamVector::Ones(3), tight()),
               std::runtime_error);
}

TEST(MrqlpSolve, EigenvectorRhsSolvedInOneIteration) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m.diagonal() << 2.0, 2.0, 2.0;
  ParamVector g(3);
  g << 1.0, -2.0, 0.5;
  const KrylovSolution sol = mrqlp_solve(DenseSymMatrix(m), g, tight());
  EXPECT_LT((sol.step + g / 2.0).norm(), 1e-12);
  EXPECT_EQ(sol.iterations, 1);
}
