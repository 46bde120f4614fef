#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ismnet/experiment/experiment.h"
#include "ismnet/ism/ism.h"
#include "ismnet/model/network.h"
#include "ismnet/sim/sim.h"
#include "ismnet/synthesis/synthesis.h"

namespace ismnet {

/// Network description. Omitting dictionary, A and B selects the two-state
/// benchmark subsystem; giving any of them requires all three.
struct NetworkSpec {
  TopologyKind topology = TopologyKind::kRing;
  int n = 10;
  std::optional<double> coupling_scale;       // anti-identity weight; per-kind default
  std::optional<Eigen::MatrixXd> coupling;    // explicit coupling block instead
  std::vector<std::pair<int, int>> edges;     // custom topology, 1-based (from, to)
  int state_dim = 2;
  std::vector<std::string> dictionary;        // nonlinear terms
  int monomials_up_to = 0;
  std::optional<Eigen::MatrixXd> A, B;
  std::optional<Perturbation> perturbation;   // benchmark default when omitted
  bool seeded_phase = false;                  // shift each subsystem's phase by the run seed

  bool benchmark() const { return !A && !B && dictionary.empty() && monomials_up_to == 0; }
  NetworkModel build(std::uint64_t seed) const;
};

struct VerifySpec {
  double shrink = 1e-2;
  double deadline = 10.0;            // default: sim.horizon
  double gas_floor = 1e-2;
  std::optional<double> sigma_band;  // default: the ISM design's band
  int mc_samples = 10000;
  double mc_radius = 10.0;
  double decay_slack = 1e-6;
  double decay_fraction = 0.999;
  double nominal_horizon = 5.0;      // length of the perturbation-free decay run
  bool negative_control = true;      // also run iss_only with the perturbation
  double residual_level = 0.1;       // negative control: limsup over the last half
};

struct PipelineSpec {
  int retries = 3;
  std::vector<double> kappa_grid;  // tried in order after the configured kappa
  std::vector<double> mu_grid;
  bool reuse = true;               // one synthesis per group of identical subsystems
  int parallel = 1;
  bool strict_dense = false;
  bool desk_scale = false;         // caps N at 10 and the horizon at 10 s
};

struct RunConfig {
  std::uint64_t seed = 1;
  NetworkSpec network;
  ExperimentConfig experiment;
  SynthesisOptions synthesis;
  IsmOptions ism;
  SimConfig sim;
  VerifySpec verify;
  PipelineSpec pipeline;

  /// Throws ConfigError on unknown fields, wrong types or invalid values.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;
  /// Applies desk-scale caps and cross-section checks.
  void finalize();
};

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what);

}  // namespace ismnet
