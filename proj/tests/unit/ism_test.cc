#include <gtest/gtest.h>

#include <random>

#include "ismnet/error.h"
#include "ismnet/ism/ism.h"
#include "ismnet/model/benchmark.h"
#include "ismnet/synthesis/synthesis.h"

namespace ismnet {
namespace {

TEST(DesignC, DefaultIsTransposeOfBhat) {
  const Eigen::MatrixXd B = Eigen::Vector2d(0, 1);
  EXPECT_EQ(design_C(B), B.transpose());
  EXPECT_EQ(design_C(Eigen::MatrixXd::Identity(2, 2)), Eigen::MatrixXd::Identity(2, 2));
}

TEST(DesignC, OverrideChecks) {
  const Eigen::MatrixXd B = Eigen::Vector2d(0, 1);
  Eigen::MatrixXd ones(1, 2);
  ones << 1, 1;
  EXPECT_EQ(design_C(B, ones), ones);
  Eigen::MatrixXd bad(1, 2);
  bad << -1, 0;
  EXPECT_THROW(design_C(B, bad), ConfigError);
  EXPECT_THROW(design_C(B, Eigen::MatrixXd::Ones(2, 2)), DimensionError);
  EXPECT_THROW(design_C(Eigen::MatrixXd::Zero(2, 1)), DomainError);
}

TEST(DesignTheta, PublishedGain) {
  const Eigen::MatrixXd B = Eigen::Vector2d(0, 1);
  const Eigen::MatrixXd C = design_C(B);
  EXPECT_EQ(theta_lower_bound(C, B, 20.0), 20.0);
  EXPECT_EQ(design_theta(C, B, 20.0), 20.1);
}

TEST(DesignTheta, EigenvalueRatioAndZeroBound) {
  const Eigen::MatrixXd B = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_DOUBLE_EQ(design_theta(I, B, 3.0, 0.1), 4.0 * 3.0 + 0.1);
  EXPECT_DOUBLE_EQ(design_theta(I, B, 0.0, 0.25), 0.25);
  EXPECT_THROW(design_theta(I, B, 1.0, 0.0), DomainError);
}

TEST(DesignTheta, NonSymmetricProductUsesSymmetricPart) {
  Eigen::MatrixXd CB(2, 2);
  CB << 2, 1, -1, 2;  // symmetric part 2 I
  EXPECT_DOUBLE_EQ(theta_lower_bound(Eigen::MatrixXd::Identity(2, 2), CB, 5.0), 5.0);
}

TEST(IsmControl, UnitVectorLaw) {
  IsmController c = design_ism(Eigen::Vector2d(0, 1), 20.0);
  EXPECT_EQ(ism_control(c, Eigen::VectorXd::Zero(1))[0], 0.0);
  EXPECT_DOUBLE_EQ(ism_control(c, Eigen::VectorXd::Constant(1, 5.0))[0], -20.1);
  EXPECT_DOUBLE_EQ(ism_control(c, Eigen::VectorXd::Constant(1, -5.0))[0], 20.1);
  // half the layer width: linear zone at half gain
  EXPECT_DOUBLE_EQ(ism_control(c, Eigen::VectorXd::Constant(1, 5e-4))[0], -20.1 * 0.5);
  c.mode = Regularization::kIdealSign;
  EXPECT_DOUBLE_EQ(ism_control(c, Eigen::VectorXd::Constant(1, 5e-4))[0], -20.1);
}

TEST(IsmControl, VectorMagnitudeIsTheta) {
  IsmOptions opt;
  opt.mode = Regularization::kIdealSign;
  const auto c = design_ism(Eigen::MatrixXd::Identity(3, 3), 2.0, opt);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Vector3d s(g(rng), g(rng), g(rng));
    EXPECT_NEAR(ism_control(c, s).norm(), c.theta, 1e-12);
    EXPECT_LT(ism_control(c, s).dot(s), 0.0);
  }
}

TEST(IsmControl, BandFormula) {
  const auto c = design_ism(Eigen::Vector2d(0, 1), 20.0);
  EXPECT_NEAR(c.sliding_band(1e-4), 1e-3 * (1.0 + 20.0 / 20.1), 1e-15);
}

TEST(Transient, MatchesTrueModel) {
  const auto net = benchmark_network(TopologyKind::kRing, 4);
  ExperimentConfig cfg;
  const auto d = collect_trajectories(net, 1, cfg);
  const Eigen::MatrixXd D = net.coupling_matrix(1);
  const auto dict = net.subsystem(1).dictionary_ptr();
  const auto cert = synthesize_iss(d, D, dict, SynthesisOptions{});
  const ClosedLoopRep rep(d, D, cert.G(), dict);
  const auto& s = net.subsystem(1);
  const Eigen::MatrixXd C = design_C(s.B());
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd x = Eigen::Vector2d(u(rng), u(rng));
    const Eigen::VectorXd w = Eigen::Vector2d(u(rng), u(rng));
    const Eigen::VectorXd z = dict->eval(x);
    const Eigen::VectorXd expect = -C * (s.A() * z + s.B() * (cert.K * z) + D * w);
    const Eigen::VectorXd got = transient_rhs(C, rep, x, w, D);
    EXPECT_LT((got - expect).norm(), 1e-8 * (1.0 + expect.norm()));
  }
  EXPECT_LT(transient_rhs(C, rep, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), D).norm(), 1e-12);
}

TEST(Regularization, NameRoundTrip) {
  for (auto m : {Regularization::kIdealSign, Regularization::kBoundaryLayer}) {
    EXPECT_EQ(parse_regularization(regularization_name(m)), m);
  }
  EXPECT_THROW(parse_regularization("smooth"), ConfigError);
}

}  // namespace
}  // namespace ismnet
