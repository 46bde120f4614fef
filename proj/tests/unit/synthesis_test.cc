#include <gtest/gtest.h>

#include <random>

#include "ismnet/error.h"
#include "ismnet/linalg.h"
#include "ismnet/model/benchmark.h"
#include "ismnet/synthesis/synthesis.h"

namespace ismnet {
namespace {

struct Fixture {
  NetworkModel net;
  DataMatrices d;
  Eigen::MatrixXd D;
};

Fixture collect(NetworkModel net, int i = 1, std::uint64_t seed = 1) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  auto d = collect_trajectories(net, i, cfg);
  auto D = net.coupling_matrix(i);
  return {std::move(net), std::move(d), std::move(D)};
}

Fixture benchmark_fixture() { return collect(benchmark_network(TopologyKind::kRing, 4)); }

NetworkModel linear_network(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int n = 2) {
  auto dict = std::make_shared<const Dictionary>(n);
  std::vector<SubsystemModel> subs(3, SubsystemModel(dict, A, B));
  return NetworkModel(subs, Topology::build(TopologyKind::kRing, 3, 0.01 * Eigen::MatrixXd::Identity(n, n)));
}

TEST(Synthesis, BenchmarkCertificateIsValid) {
  auto f = benchmark_fixture();
  SynthesisOptions opt;
  const auto cert = synthesize_iss(f.d, f.D, f.net.subsystem(1).dictionary_ptr(), opt);
  EXPECT_GT(cert.alpha1, 0.0);
  EXPECT_GE(cert.alpha2, cert.alpha1);
  EXPECT_NEAR(cert.rho, 1e-4, 1e-12);
  EXPECT_LT(cert.solve_seconds, 5.0);
  const auto report = validate_certificate(cert, f.d, f.D, f.net.subsystem(1).dictionary_ptr(),
                                           10000, 10.0, 99);
  EXPECT_TRUE(report.ok()) << report.summary();
  EXPECT_EQ(report.monte_carlo.samples, 10000);
}

TEST(Synthesis, ControllerMatchesTrueClosedLoop) {
  // Oracle: A Z(x) + B K Z(x) from the true model must equal the data-based
  // closed loop, and the matched nonlinear terms must cancel.
  auto f = benchmark_fixture();
  const auto dict = f.net.subsystem(1).dictionary_ptr();
  const auto cert = synthesize_iss(f.d, f.D, dict, SynthesisOptions{});
  const auto& s = f.net.subsystem(1);
  const Eigen::MatrixXd closed = s.A() + s.B() * cert.K;
  EXPECT_LT(linalg::max_abs(closed.rightCols(closed.cols() - 2)), 1e-6);
  const ClosedLoopRep rep(f.d, f.D, cert.G(), dict);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector2d x(u(rng), u(rng));
    const Eigen::VectorXd expect = closed * dict->eval(Eigen::VectorXd(x));
    EXPECT_LT((rep(x) - expect).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + expect.norm()));
  }
  // Linear part: classical Lyapunov inequality with the same P.
  const Eigen::MatrixXd Acl = closed.leftCols(2);
  const Eigen::MatrixXd lyap = Acl.transpose() * cert.P + cert.P * Acl + cert.kappa * cert.P;
  EXPECT_LT(-sdp::min_eigenvalue(-lyap), 0.0);
  Eigen::EigenSolver<Eigen::MatrixXd> es(Acl);
  for (int k = 0; k < 2; ++k) EXPECT_LT(es.eigenvalues()[k].real(), -cert.kappa / 2.0);
}

TEST(Synthesis, SucceedsAcrossExperimentSeeds) {
  const auto net = benchmark_network(TopologyKind::kRing, 4);
  for (int i : {0, 1}) {
    const auto dict = net.subsystem(i).dictionary_ptr();
    const auto D = net.coupling_matrix(i);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ExperimentConfig cfg;
      cfg.seed = seed;
      const auto d = collect_trajectories(net, i, cfg);
      IssCertificate cert;
      ASSERT_NO_THROW(cert = synthesize_iss(d, D, dict, SynthesisOptions{}))
          << "subsystem " << i << " seed " << seed;
      const auto report = validate_certificate(cert, d, D, dict, 500, 10.0, seed);
      EXPECT_TRUE(report.ok()) << "seed " << seed << ": " << report.summary();
    }
  }
}

TEST(Synthesis, ScalarLinearSystem) {
  // x' = 2 x + u: Delta = S, no nonlinear terms, G2 is empty.
  auto net = linear_network(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Ones(1, 1), 1);
  auto f = collect(std::move(net), 0, 4);
  SynthesisOptions opt;
  opt.kappa = 1.0;
  const auto cert = synthesize_iss(f.d, f.D, f.net.subsystem(0).dictionary_ptr(), opt);
  EXPECT_EQ(cert.G2.cols(), 0);
  const double acl = 2.0 + cert.K(0, 0);
  EXPECT_LT(2.0 * acl * cert.P(0, 0) + opt.kappa * cert.P(0, 0), 0.0);
  EXPECT_NEAR(cert.rho, 1e-4, 1e-15);
}

TEST(Synthesis, UnmatchedNonlinearityIsReported) {
  auto dict = benchmark_dictionary();
  Eigen::MatrixXd A = benchmark_subsystem().A();
  A(0, 2) = 1.0;  // x1^2 enters the unactuated row
  std::vector<SubsystemModel> subs(4, SubsystemModel(dict, A, benchmark_subsystem().B()));
  auto f = collect(NetworkModel(subs, Topology::build(TopologyKind::kRing, 4)));
  try {
    synthesize_iss(f.d, f.D, dict, SynthesisOptions{});
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.family(), kNonlinearCancellation);
  }
}

TEST(Synthesis, UncontrollableUnstableModeIsDecayInfeasible) {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0, 0, 0;
  auto f = collect(linear_network(A, Eigen::MatrixXd(Eigen::Vector2d(0, 1))), 0, 2);
  SynthesisOptions opt;
  opt.gain_bound_max = 1e4;
  try {
    synthesize_iss(f.d, f.D, f.net.subsystem(0).dictionary_ptr(), opt);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.family(), kDecayLmi);
  }
}

TEST(Synthesis, EqualitiesDoNotDependOnKappa) {
  auto f = benchmark_fixture();
  const auto dict = f.net.subsystem(1).dictionary_ptr();
  SynthesisOptions a, b;
  a.kappa = 0.5;
  b.kappa = 3.0;
  const auto ca = synthesize_iss(f.d, f.D, dict, a);
  const auto cb = synthesize_iss(f.d, f.D, dict, b);
  EXPECT_LT(linalg::max_abs(ca.G2 - cb.G2), 1e-12);
}

TEST(Synthesis, FeasibilityOnlyObjective) {
  auto f = benchmark_fixture();
  SynthesisOptions opt;
  opt.objective = Objective::kFeasibilityOnly;
  const auto cert = synthesize_iss(f.d, f.D, f.net.subsystem(1).dictionary_ptr(), opt);
  EXPECT_EQ(cert.objective, Objective::kFeasibilityOnly);
  EXPECT_GT(cert.alpha1, 0.0);
}

TEST(Validation, CorruptedCertificateFails) {
  auto f = benchmark_fixture();
  const auto dict = f.net.subsystem(1).dictionary_ptr();
  auto cert = synthesize_iss(f.d, f.D, dict, SynthesisOptions{});
  auto flipped = cert;
  flipped.P = -cert.P;
  EXPECT_FALSE(validate_certificate(flipped, f.d, f.D, dict, 100, 10.0, 1).ok());
  auto bent = cert;
  bent.Phi(0, 1) += 0.5;
  bent.Phi(1, 0) += 0.5;
  const auto r = validate_certificate(bent, f.d, f.D, dict, 100, 10.0, 1);
  EXPECT_FALSE(r.residuals_ok);
  EXPECT_FALSE(r.ok());
}

TEST(Validation, InflatedKappaProducesViolations) {
  auto f = benchmark_fixture();
  const auto dict = f.net.subsystem(1).dictionary_ptr();
  auto cert = synthesize_iss(f.d, f.D, dict, SynthesisOptions{});
  cert.kappa = 1e6;
  const ClosedLoopRep rep(f.d, f.D, cert.G(), dict);
  const auto mc = monte_carlo_iss(cert, rep, f.D, 1000, 10.0, 3);
  EXPECT_GT(mc.violations, 900);
  EXPECT_FALSE(mc.worst_x.empty());
}

TEST(Validation, MonteCarloIsDeterministic) {
  auto f = benchmark_fixture();
  const auto dict = f.net.subsystem(1).dictionary_ptr();
  const auto cert = synthesize_iss(f.d, f.D, dict, SynthesisOptions{});
  const ClosedLoopRep rep(f.d, f.D, cert.G(), dict);
  const auto a = monte_carlo_iss(cert, rep, f.D, 700, 5.0, 8);
  const auto b = monte_carlo_iss(cert, rep, f.D, 700, 5.0, 8);
  EXPECT_EQ(a.max_violation, b.max_violation);
  EXPECT_LT(a.max_violation, 0.0);
}

TEST(Validation, HugeRadiusOnlyShowsRounding) {
  auto f = benchmark_fixture();
  const auto dict = f.net.subsystem(1).dictionary_ptr();
  const auto cert = synthesize_iss(f.d, f.D, dict, SynthesisOptions{});
  const ClosedLoopRep rep(f.d, f.D, cert.G(), dict);
  const auto mc = monte_carlo_iss(cert, rep, f.D, 2000, 1e6, 4);
  EXPECT_EQ(mc.violations, 0) << "max relative " << mc.max_relative_violation;
}

struct RhoCase {
  TopologyKind kind;
  int n;
  int subsystem;
  double mu;
  double rho;    // published, rounded to 5 significant digits
  double exact;  // |D|^2 / mu in closed form
};

class IssBoundsTable : public ::testing::TestWithParam<RhoCase> {};

TEST_P(IssBoundsTable, RhoMatchesPublishedValue) {
  const auto c = GetParam();
  const auto top = Topology::build(c.kind, c.n);
  std::vector<SubsystemModel> subs(c.n, benchmark_subsystem());
  const NetworkModel net(subs, top);
  const auto b = iss_bounds(Eigen::Matrix2d::Identity(), net.coupling_matrix(c.subsystem), c.mu);
  EXPECT_NEAR(b.rho / c.exact, 1.0, 1e-8);
  EXPECT_NEAR(b.rho / c.rho, 1.0, 5e-5);
  EXPECT_DOUBLE_EQ(b.alpha1, 1.0);
}

INSTANTIATE_TEST_SUITE_P(
    Topologies, IssBoundsTable,
    ::testing::Values(
        RhoCase{TopologyKind::kFullyConnected, 1000, 0, 1.0, 2.4975e-4, 999 * 25e-8},
        RhoCase{TopologyKind::kRing, 2000, 5, 1.0, 1e-4, 1e-4},
        RhoCase{TopologyKind::kBinaryTree, 4095, 7, 1.2, 8.3333e-5, 1e-4 / 1.2},
        RhoCase{TopologyKind::kStar, 2000, 3, 0.7, 1.4286e-4, 1e-4 / 0.7},
        RhoCase{TopologyKind::kLine, 2000, 9, 0.15, 6.6667e-4, 1e-4 / 0.15}));

TEST(IssBounds, EmptyCouplingGivesZeroRho) {
  EXPECT_EQ(iss_bounds(Eigen::Matrix2d::Identity(), Eigen::MatrixXd(2, 0), 1.0).rho, 0.0);
  EXPECT_THROW(iss_bounds(Eigen::Matrix2d::Identity(), Eigen::MatrixXd(2, 0), 0.0), DomainError);
}

TEST(GeometricGrid, EndpointsAndRatio) {
  const auto g = geometric_grid(0.1, 10.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 0.1);
  EXPECT_DOUBLE_EQ(g.back(), 10.0);
  EXPECT_NEAR(g[2], 1.0, 1e-12);
  EXPECT_THROW(geometric_grid(0.0, 1.0, 3), ConfigError);
}

TEST(Objective, NameRoundTrip) {
  for (auto o : {Objective::kFeasibilityOnly, Objective::kMinConditionNumber}) {
    EXPECT_EQ(parse_objective(objective_name(o)), o);
  }
  EXPECT_THROW(parse_objective("fastest"), ConfigError);
}

}  // namespace
}  // namespace ismnet
