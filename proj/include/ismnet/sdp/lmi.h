#pragma once

#include <deque>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ismnet::sdp {

/// Affine symmetric matrix function F(v) = F0 + sum_k v_k F_k constrained to
/// be positive semidefinite. Coefficients are stored densely; an empty F_k
/// (size 0) marks a variable the block does not depend on.
struct LmiBlock {
  std::string name;
  Eigen::MatrixXd F0;
  std::vector<Eigen::MatrixXd> F;

  int dim() const { return static_cast<int>(F0.rows()); }
  Eigen::MatrixXd eval(const Eigen::VectorXd& v) const;
};

/// minimize c^T v  subject to  F_j(v) >= 0 for every block j.
struct Problem {
  int num_vars = 0;
  Eigen::VectorXd c;  // empty or zero: analytic center of the feasible set
  std::deque<LmiBlock> blocks;  // deque: add_block references stay valid

  /// Adds a block with all-empty coefficients, to be filled by the caller.
  LmiBlock& add_block(std::string name, Eigen::MatrixXd F0);
  void validate() const;
};

struct Options {
  double gap_tol = 1e-9;      // stop when (sum of block sizes) / t < gap_tol * (1 + |c^T v|)
  double gap_accept = 1e-6;   // fallback gap when rounding stalls the path
  double t_init = 1.0;
  double t_growth = 20.0;
  double newton_tol = 1e-10;  // Newton decrement^2 / 2 threshold during centering
  int max_newton = 400;       // per phase
  int max_center = 100;       // analytic-center iterations when c = 0
};

struct Result {
  Eigen::VectorXd v;
  double objective = 0.0;
  int newton_steps = 0;
  /// Smallest eigenvalue of each block at the solution, same order as blocks.
  std::vector<double> min_eig;
};

/// Dense primal log-barrier interior-point method. Phase I minimizes s with
/// F_j(v) + s I >= 0 to find a strictly feasible start (skipped when
/// `start` is strictly feasible). Throws InfeasibleError naming the block
/// whose dual weight dominates when no strictly feasible point exists, and
/// SolverError when iterations stall.
Result solve(const Problem& problem, const Options& options = {},
             const Eigen::VectorXd* start = nullptr);

/// Smallest eigenvalue of a symmetric matrix (0 for empty matrices).
double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace ismnet::sdp
