#include <gtest/gtest.h>

#include <random>

#include "ismnet/error.h"
#include "ismnet/model/benchmark.h"

namespace ismnet {
namespace {

TEST(Network, LineOfTwoBlockLayout) {
  const auto net = benchmark_network(TopologyKind::kLine, 2);
  const auto A = net.assembled_A();
  EXPECT_EQ(net.block(A, 0, 0), net.subsystem(0).A());
  EXPECT_EQ(net.block(A, 1, 1), net.subsystem(1).A());
  EXPECT_EQ(net.block(A, 0, 1), Eigen::MatrixXd::Zero(2, 9));
  Eigen::MatrixXd dhat = Eigen::MatrixXd::Zero(2, 9);
  dhat.leftCols(2) = default_coupling(TopologyKind::kLine, 2);
  EXPECT_EQ(net.block(A, 1, 0), dhat);
}

TEST(Network, UncoupledIsBlockDiagonal) {
  std::vector<SubsystemModel> subs(3, benchmark_subsystem());
  NetworkModel net(subs, Topology::custom(3, {}, {}));
  const auto A = net.assembled_A();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) {
        EXPECT_EQ(net.block(A, i, j).norm(), 0.0);
      }
    }
  }
  EXPECT_EQ(net.psi(1), 0);
}

TEST(Network, RingBlocksRecoverStoredWeights) {
  const auto net = benchmark_network(TopologyKind::kRing, 3);
  const auto A = net.assembled_A();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const Eigen::MatrixXd blk = net.block(A, i, j);
      const bool edge = net.topology().has_edge(j, i);
      EXPECT_NEAR(blk.norm(), edge ? 1e-2 * std::sqrt(2.0) : 0.0, 1e-16);
      if (edge) {
        EXPECT_EQ(blk.leftCols(2), default_coupling(TopologyKind::kRing, 2));
        EXPECT_EQ(blk.rightCols(7).norm(), 0.0);
        // spectral norm of the anti-identity block is exactly the scale
        EXPECT_NEAR(blk.leftCols(2).jacobiSvd().singularValues()[0], 1e-2, 1e-16);
      }
    }
  }
}

TEST(Network, CouplingMatrixOrderAndGather) {
  const auto net = benchmark_network(TopologyKind::kFullyConnected, 4);
  EXPECT_EQ(net.psi(2), 6);
  Eigen::VectorXd x(8);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  Eigen::VectorXd w(6);
  w << 1, 2, 3, 4, 7, 8;
  EXPECT_EQ(net.gather_w(2, x), w);
  EXPECT_EQ(net.coupling_matrix(2).cols(), 6);
}

TEST(Network, RhsMatchesSubsystemRhsWithGatheredInputs) {
  const auto net = benchmark_network(TopologyKind::kStar, 5);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2, 2);
  Eigen::VectorXd x(10), in(5);
  for (auto& v : x) v = u(rng);
  for (auto& v : in) v = u(rng);
  const Eigen::VectorXd xdot = net.rhs(x, in, 0.3, true);
  for (int i = 0; i < 5; ++i) {
    const auto w = net.gather_w(i, x);
    const auto ref = subsystem_rhs(net.subsystem(i), net.coupling_matrix(i),
                                   x.segment(2 * i, 2), in.segment(i, 1), w, 0.3, true);
    EXPECT_NEAR((xdot.segment(2 * i, 2) - ref).norm(), 0.0, 1e-13);
  }
}

TEST(Network, EquivalenceClassesFollowCoupling) {
  const auto star = benchmark_network(TopologyKind::kStar, 5);
  const std::vector<int> expect{0, 1, 1, 1, 1};
  EXPECT_EQ(star.equivalence_classes(), expect);
  const auto ring = benchmark_network(TopologyKind::kRing, 4);
  EXPECT_EQ(ring.equivalence_classes(), std::vector<int>(4, 0));
}

TEST(Network, RejectsMismatchedCoupling) {
  std::vector<SubsystemModel> subs(2, benchmark_subsystem());
  EXPECT_THROW(NetworkModel(subs, Topology::custom(2, {{0, 1, 0}}, {Eigen::MatrixXd::Ones(3, 2)})),
               DimensionError);
  EXPECT_THROW(NetworkModel(subs, Topology::build(TopologyKind::kRing, 3)), DimensionError);
}

TEST(Subsystem, RhsAtOriginAndPerturbation) {
  const auto s = benchmark_subsystem();
  const Eigen::MatrixXd D(2, 0);
  const Eigen::VectorXd none(0);
  const auto f = subsystem_rhs(s, D, Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(1), none, 0.0, false);
  EXPECT_EQ(f, Eigen::VectorXd(Eigen::Vector2d(0, 1)));
  const auto g = subsystem_rhs(s, D, Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(1), none, 0.0, true);
  EXPECT_EQ(g, f);
  const double t = 0.0123;
  const auto h = subsystem_rhs(s, D, Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(1), none, t, true);
  EXPECT_NEAR(h[1] - f[1], 20.0 * std::sin(100.0 * t), 1e-14);
}

TEST(Subsystem, CancellingInputRemovesNonlinearTerms) {
  const auto s = benchmark_subsystem();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  const Eigen::MatrixXd D(2, 0);
  for (int k = 0; k < 50; ++k) {
    Eigen::Vector2d x(u(rng), u(rng));
    const auto z = s.dictionary().eval(Eigen::VectorXd(x));
    Eigen::VectorXd cancel(1);
    cancel[0] = -(s.A().row(1).tail(7) * z.tail(7))(0);
    const auto f = subsystem_rhs(s, D, x, cancel, Eigen::VectorXd(0), 0.0, false);
    EXPECT_NEAR(f[0], x[0] + x[1], 1e-14);
    EXPECT_NEAR(f[1], 0.0, 1e-12);
  }
}

TEST(Subsystem, PerturbationIsClippedToBound) {
  Perturbation p{5.0, 3.0, 0.0, 1.0, 2.0};
  for (double t = 0; t < 3; t += 0.01) EXPECT_LE(p.eval(3, t).norm(), 2.0 + 1e-15);
  EXPECT_NEAR(p.period(), 2 * M_PI / 3, 1e-15);
  EXPECT_EQ(p.with_seeded_phase(7, 1).phase, p.with_seeded_phase(7, 1).phase);
  EXPECT_NE(p.with_seeded_phase(7, 1).phase, p.with_seeded_phase(7, 2).phase);
}

}  // namespace
}  // namespace ismnet
