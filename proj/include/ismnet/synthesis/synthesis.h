#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ismnet/experiment/experiment.h"
#include "ismnet/sdp/lmi.h"

namespace ismnet {

enum class Objective { kFeasibilityOnly, kMinConditionNumber };

std::string_view objective_name(Objective objective);
Objective parse_objective(std::string_view name);

// Constraint family names used in diagnostics.
inline constexpr std::string_view kNonlinearCancellation = "nonlinear-cancellation";
inline constexpr std::string_view kDictionaryConsistency = "dictionary-consistency";
inline constexpr std::string_view kLyapunovParametrization = "lyapunov-parametrization";
inline constexpr std::string_view kDecayLmi = "decay-lmi";

struct SynthesisOptions {
  double kappa = 2.0;
  double mu = 1.0;
  double eps_pd = 1e-6;   // Phi >= eps_pd I
  Objective objective = Objective::kMinConditionNumber;
  // Spectral-norm bound on Y; grows by x10 up to gain_bound_max when the
  // program is infeasible under the current bound.
  double gain_bound = 1e3;
  double gain_bound_max = 1e6;
  // After minimizing t (Phi <= t I), later stages keep
  // lambda_max(Phi) <= (1 + ceiling_slack) t* while spreading the spectrum
  // of Phi and then shrinking the gain.
  double ceiling_slack = 1.0;
  double equality_tol = 1e-6;
  double lmi_tol = 1e-8;
  int validation_samples = 1000;
  double validation_radius = 10.0;
  std::uint64_t validation_seed = 7;
  sdp::Options solver;

  void validate() const;
};

/// ISS Lyapunov function V(x) = x^T P x and controller u* = K Z(x) for one
/// subsystem, with the constants of the ISS inequality
///   LV <= -kappa V + rho |w|^2,   alpha1 |x|^2 <= V <= alpha2 |x|^2.
struct IssCertificate {
  Eigen::MatrixXd P, Phi, Y, G2, K;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
  double mu = 0.0;
  // Solver bookkeeping.
  Objective objective = Objective::kMinConditionNumber;
  double gain_bound = 0.0;
  int newton_steps = 0;
  double solve_seconds = 0.0;

  int state_dim() const { return static_cast<int>(P.rows()); }
  /// G = [Y P, G2] (T x z).
  Eigen::MatrixXd G() const;
};

struct IssBounds {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double rho = 0.0;
};

/// alpha1 = lambda_min(P), alpha2 = lambda_max(P), rho = ||D||_2^2 / mu.
IssBounds iss_bounds(const Eigen::MatrixXd& P, const Eigen::MatrixXd& D, double mu);

/// Solves the data-driven ISS program and returns a validated certificate.
/// Throws InfeasibleError with the failing constraint family, SolverError
/// on numerical failure, and Error if the solution does not validate.
IssCertificate synthesize_iss(const DataMatrices& d, const Eigen::MatrixXd& D,
                              std::shared_ptr<const Dictionary> dictionary,
                              const SynthesisOptions& opt);

struct MonteCarloReport {
  int samples = 0;
  int violations = 0;
  // Violations whose size is below 1e-10 relative to the terms involved:
  // rounding, not a failure of the inequality.
  int conditioning_violations = 0;
  double max_violation = 0.0;
  double max_relative_violation = 0.0;
  std::vector<Eigen::VectorXd> worst_x;  // up to 5 violating states
  bool ok() const { return violations == 0; }
};

struct ValidationReport {
  double residual_cancellation = 0.0;    // max |L G2|
  double residual_consistency = 0.0;     // max |Delta G2 - [0; I]|
  double residual_parametrization = 0.0; // max |Delta Y - [Phi; 0]|
  double lmi_max_eig = 0.0;              // lambda_max of the decay LMI left side
  double p_min_eig = 0.0;
  double gain_formula_error = 0.0;       // max |K - I [Y P, G2]|
  MonteCarloReport monte_carlo;
  bool residuals_ok = false;
  bool lmi_ok = false;
  std::string note;  // why Monte Carlo was skipped, if it was
  bool ok() const { return residuals_ok && lmi_ok && monte_carlo.ok(); }
  std::string summary() const;
};

ValidationReport validate_certificate(const IssCertificate& cert, const DataMatrices& d,
                                      const Eigen::MatrixXd& D,
                                      std::shared_ptr<const Dictionary> dictionary,
                                      int n_mc, double radius, std::uint64_t seed,
                                      double equality_tol = 1e-6, double lmi_tol = 1e-8);

/// Samples x and w uniformly in balls of the given radius and checks
///   2 x^T P (rep(x) + D w) <= -kappa x^T P x + rho |w|^2 + 1e-6.
MonteCarloReport monte_carlo_iss(const IssCertificate& cert, const ClosedLoopRep& rep,
                                 const Eigen::MatrixXd& D, int n_mc, double radius,
                                 std::uint64_t seed);

/// count points geometrically spaced from lo to hi (inclusive).
std::vector<double> geometric_grid(double lo, double hi, int count);

}  // namespace ismnet
