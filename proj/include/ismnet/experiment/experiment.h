#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "ismnet/model/network.h"

namespace ismnet {

enum class DerivativeMode { kExactOracle, kForwardDifference };

std::string_view derivative_mode_name(DerivativeMode mode);
DerivativeMode parse_derivative_mode(std::string_view name);

/// How the two input-state trajectories of one subsystem are recorded.
struct ExperimentConfig {
  int samples = 10;           // T
  double tau = 0.1;           // sampling interval [s]
  double amplitude = 1.0;     // excitation values are uniform in [-a, a]
  double x0_box = 0.5;        // initial network state uniform in [-b, b]
  int substeps = 10;          // integration steps per sampling interval
  DerivativeMode derivative_mode = DerivativeMode::kExactOracle;
  std::uint64_t seed = 1;

  void validate(int dict_size) const;
};

/// One recorded run: T + 1 state samples (the last one only feeds forward
/// differences), T inputs and derivative samples.
struct Trajectory {
  Eigen::VectorXd time;   // T + 1
  Eigen::MatrixXd x;      // n x (T + 1)
  Eigen::MatrixXd u;      // m x T
  Eigen::MatrixXd w;      // psi x (T + 1)
  Eigen::MatrixXd xdot;   // n x T
};

/// Data blocks of one subsystem; the `bar` members come from the zero-input
/// run started at the same network state.
struct DataMatrices {
  int subsystem = 0;
  Eigen::MatrixXd I, S, W, Sp, Delta;
  Eigen::MatrixXd S_bar, W_bar, Sp_bar, Delta_bar;
  Eigen::VectorXd x0;          // subsystem initial state
  Eigen::VectorXd network_x0;  // whole-network initial state
  Trajectory excited, zero_input;

  int samples() const { return static_cast<int>(S.cols()); }
  int state_dim() const { return static_cast<int>(S.rows()); }
  int input_dim() const { return static_cast<int>(I.rows()); }
  int dict_size() const { return static_cast<int>(Delta.rows()); }
  int psi() const { return static_cast<int>(W.rows()); }
};

/// Seed of subsystem i's experiment, derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, int index);

/// Simulates the nominal network twice from one random initial state: once
/// with piecewise-constant random excitation on subsystem i (zero input
/// elsewhere) and once with zero input everywhere.
/// Throws DivergenceError when the state leaves the representable range.
DataMatrices collect_trajectories(const NetworkModel& net, int i,
                                  const ExperimentConfig& cfg);

/// (x(t + tau) - x(t)) / tau for each of the first T columns.
Eigen::MatrixXd forward_difference(const Eigen::MatrixXd& states, double tau);

struct RichnessReport {
  int dict_size = 0;
  int input_dim = 0;
  int rank_delta = 0;
  int rank_delta_bar = 0;
  int rank_input = 0;
  double cond_delta = 0.0;
  double cond_delta_bar = 0.0;

  bool delta_full() const { return rank_delta == dict_size; }
  bool delta_bar_full() const { return rank_delta_bar == dict_size; }
  bool input_full() const { return rank_input == input_dim; }
  bool ok() const { return delta_full() && delta_bar_full() && input_full(); }
  /// Empty when ok(); otherwise what failed plus a retry hint.
  std::string diagnosis() const;
};

/// Numerical ranks at cutoff 1e-8 * sigma_max.
RichnessReport check_richness(const DataMatrices& d);

/// Minimum-norm solution of Delta_bar Q = Delta. Throws RankError if
/// Delta_bar lacks full row rank or the residual check fails.
Eigen::MatrixXd solve_Q(const Eigen::MatrixXd& Delta, const Eigen::MatrixXd& Delta_bar);

/// Data-based input matrix
///   B_hat = (Sp - (Sp_bar - D W_bar) Q - D W) I^+.
Eigen::MatrixXd estimate_B(const DataMatrices& d, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& D);

/// Closed-loop drift built from data alone,
///   rep(x) = (Sp - D W) G Z(x),
/// which equals A Z(x) + B u*(x) for u* = I G Z(x) whenever Delta G = I.
class ClosedLoopRep {
 public:
  ClosedLoopRep(const DataMatrices& d, const Eigen::MatrixXd& D, const Eigen::MatrixXd& G,
                std::shared_ptr<const Dictionary> dictionary, double tol = 1e-8);

  /// Dense n x z matrix (Sp - D W) G.
  const Eigen::MatrixXd& matrix() const { return LG_; }
  const Dictionary& dictionary() const { return *dictionary_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  /// In-place form; `z` is scratch of length z.
  void eval(std::span<const double> x, std::span<double> z, std::span<double> out) const;

 private:
  Eigen::MatrixXd LG_;
  std::shared_ptr<const Dictionary> dictionary_;
};

}  // namespace ismnet
