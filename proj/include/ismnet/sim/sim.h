#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ismnet/composition/composition.h"
#include "ismnet/integrator.h"
#include "ismnet/ism/ism.h"
#include "ismnet/model/network.h"
#include "ismnet/synthesis/synthesis.h"

namespace ismnet {

enum class ControllerMode { kNone, kIssOnly, kIssPlusIsm };

std::string_view controller_mode_name(ControllerMode mode);
ControllerMode parse_controller_mode(std::string_view name);

/// What one subsystem needs at run time: the ISS gain, the data-based
/// closed-loop drift (for the transient zeta) and the optional ISM part.
struct LocalController {
  Eigen::MatrixXd K;   // m x z
  Eigen::MatrixXd LG;  // n x z
  std::optional<IsmController> ism;
};

LocalController make_local_controller(const IssCertificate& cert, const ClosedLoopRep& rep,
                                      std::optional<IsmController> ism = std::nullopt);

struct SimConfig {
  double t0 = 0.0;
  double horizon = 10.0;
  double h = 1e-4;
  Scheme scheme = Scheme::kRk4;
  bool perturbation = true;
  ControllerMode controllers = ControllerMode::kIssPlusIsm;
  double x0_box = 100.0;                 // x0 uniform in [-b, b] per coordinate
  std::optional<Eigen::VectorXd> x0;     // explicit initial state instead
  std::uint64_t seed = 1;
  int log_every = 100;                   // downsampling of the heavy histories
  int threads = 1;
  // Step rule h <= min(tau / 10, shortest perturbation period / 50).
  double sampling_tau = 0.1;
  bool enforce_step_rule = true;

  void validate(const NetworkModel& net) const;
  long steps() const;
};

/// Norms and V are recorded at every step (uniform grid t0 + k h); states,
/// sliding variables and controls every log_every steps and at the end.
struct TrajectoryLog {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<double> norm;  // |x(t_k)|
  std::vector<double> clf;   // V(x(t_k)); empty without a network CLF
  std::vector<double> time;  // times of the downsampled columns
  Eigen::MatrixXd x, sigma, zeta, u_star, u_ism;
  Eigen::VectorXd max_sigma;     // per subsystem, max over every step
  int worst_sigma_subsystem = -1;
  double worst_sigma_time = 0.0;
  double initial_sigma = 0.0;    // max |sigma_i(t0)|
  bool aborted = false;
  std::string diagnosis;
  double wall_seconds = 0.0;

  long steps() const { return static_cast<long>(norm.size()) - 1; }
  double time_at(long k) const { return t0 + static_cast<double>(k) * h; }
  /// Nearest grid index for time t (clamped to the log).
  long index_at(double t) const;
};

/// Integrates the closed-loop network with u_i = K_i Z_i(x_i) (+ ISM) on the
/// augmented state (x, zeta). ctrl_of maps subsystems to controllers.
/// Deterministic for a given config, independent of cfg.threads.
TrajectoryLog simulate(const NetworkModel& net, std::span<const LocalController> controllers,
                       std::span<const int> ctrl_of, const SimConfig& cfg,
                       const NetworkClf* clf = nullptr);

/// Initial network state used by simulate for this config.
Eigen::VectorXd initial_state(const NetworkModel& net, const SimConfig& cfg);

struct GasReport {
  bool passed = false;
  bool shrink_ok = false;
  bool envelope_ok = false;
  double x0_norm = 0.0;
  double deadline_norm = 0.0;
  double decay_exponent = 0.0;  // fitted rate of |x| before the floor
  double envelope_gain = 0.0;   // M in M |x0| exp(-lambda t)
  double tail_max = 0.0;        // max |x| once the envelope is at the floor
  double floor = 0.0;
  std::string diagnosis;
};

/// |x(deadline)| <= shrink |x(0)|, and |x(t)| <= max(M |x0| e^{-lambda t}, floor)
/// where lambda > 0 is fitted on the samples above 10 floor, M is the
/// smallest gain covering every sample above the floor, and the envelope
/// must reach the floor by the deadline. A residual of size `floor` is
/// tolerated; a larger one is not.
GasReport verify_gas(const TrajectoryLog& log, double shrink_factor, double deadline,
                     double floor = 1e-2);

struct SlidingReport {
  bool passed = false;
  double band = 0.0;
  double max_sigma = 0.0;
  int worst_subsystem = -1;
  double worst_time = 0.0;
  bool starts_on_surface = false;  // sigma(t0) == 0 exactly
};

SlidingReport verify_sliding(const TrajectoryLog& log, double band);

struct DecayReport {
  bool passed = false;
  double kappa = 0.0;
  long checked = 0;
  long satisfied = 0;
  double fraction = 0.0;
  double worst_excess = 0.0;
  double worst_time = 0.0;
};

/// Central-difference dV/dt <= -kappa V + slack (1 + V) at >= required of
/// the interior steps.
DecayReport verify_decay(const TrajectoryLog& log, double kappa, double slack = 1e-6,
                         double required = 0.999);

}  // namespace ismnet
