#include <gtest/gtest.h>

#include "ismnet/error.h"
#include "ismnet/sdp/lmi.h"

namespace ismnet::sdp {
namespace {

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

TEST(Lmi, ScalarLowerBound) {
  Problem p;
  p.num_vars = 1;
  p.c = Eigen::VectorXd::Ones(1);
  p.add_block("floor", scalar(-1.0)).F[0] = scalar(1.0);  // x - 1 >= 0
  const auto r = solve(p);
  EXPECT_NEAR(r.v[0], 1.0, 1e-8);
}

TEST(Lmi, MinimizesLargestEigenvalue) {
  Eigen::Matrix3d A;
  A << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  Problem p;
  p.num_vars = 1;
  p.c = Eigen::VectorXd::Ones(1);
  p.add_block("ceiling", -A).F[0] = Eigen::Matrix3d::Identity();
  const auto r = solve(p);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
  EXPECT_NEAR(r.v[0], es.eigenvalues()[2], 1e-7);
  EXPECT_GE(r.min_eig[0], -1e-12);
}

TEST(Lmi, AnalyticCenterOfInterval) {
  Problem p;
  p.num_vars = 1;
  p.add_block("lower", scalar(0.0)).F[0] = scalar(1.0);
  p.add_block("upper", scalar(1.0)).F[0] = scalar(-1.0);
  const auto r = solve(p);
  EXPECT_NEAR(r.v[0], 0.5, 1e-8);
}

TEST(Lmi, InfeasibleNamesABlock) {
  Problem p;
  p.num_vars = 1;
  p.c = Eigen::VectorXd::Ones(1);
  p.add_block("at-least-one", scalar(-1.0)).F[0] = scalar(1.0);
  p.add_block("non-positive", scalar(0.0)).F[0] = scalar(-1.0);
  try {
    solve(p);
    FAIL() << "expected infeasibility";
  } catch (const InfeasibleError& e) {
    EXPECT_TRUE(e.family() == "at-least-one" || e.family() == "non-positive") << e.family();
  }
}

TEST(Lmi, LyapunovCertificate) {
  // Find symmetric P = [[a, b], [b, c]] with P >= I and A^T P + P A <= -I.
  Eigen::Matrix2d A;
  A << -1, 2, 0, -3;
  Problem p;
  p.num_vars = 3;
  p.c = Eigen::Vector3d(1, 0, 1);  // minimize trace P
  std::array<Eigen::Matrix2d, 3> E;
  E[0] << 1, 0, 0, 0;
  E[1] << 0, 1, 1, 0;
  E[2] << 0, 0, 0, 1;
  auto& floor = p.add_block("p-floor", -Eigen::MatrixXd::Identity(2, 2));
  auto& lyap = p.add_block("lyapunov", -Eigen::MatrixXd::Identity(2, 2));
  for (int k = 0; k < 3; ++k) {
    floor.F[k] = E[k];
    lyap.F[k] = -(A.transpose() * E[k] + E[k] * A);
  }
  const auto r = solve(p);
  Eigen::Matrix2d P;
  P << r.v[0], r.v[1], r.v[1], r.v[2];
  const Eigen::Matrix2d M = A.transpose() * P + P * A + Eigen::Matrix2d::Identity();
  EXPECT_LE(M.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff(), 1e-7);
  EXPECT_GE(P.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff(), 1.0 - 1e-7);
}

TEST(Lmi, StartPointIsUsedWhenFeasible) {
  Problem p;
  p.num_vars = 1;
  p.c = Eigen::VectorXd::Ones(1);
  p.add_block("floor", scalar(-2.0)).F[0] = scalar(1.0);
  const Eigen::VectorXd start = Eigen::VectorXd::Constant(1, 5.0);
  const auto r = solve(p, {}, &start);
  EXPECT_NEAR(r.v[0], 2.0, 1e-8);
}

TEST(Lmi, RejectsMalformedProblems) {
  Problem p;
  p.num_vars = 1;
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 2, 0, 1;
  p.add_block("asym", asym);
  EXPECT_THROW(solve(p), DimensionError);
}

}  // namespace
}  // namespace ismnet::sdp
