#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ismnet/model/subsystem.h"
#include "ismnet/model/topology.h"

namespace ismnet {

/// Interconnected network: subsystems plus the directed coupling graph.
/// Subsystem i sees the internal input w_i = [x_j for (j -> i), ascending j],
/// weighted by D_i = [D_ij ...] in the same order.
class NetworkModel {
 public:
  NetworkModel(std::vector<SubsystemModel> subsystems, Topology topology);

  int size() const { return static_cast<int>(subsystems_.size()); }
  const SubsystemModel& subsystem(int i) const { return subsystems_[i]; }
  const std::vector<SubsystemModel>& subsystems() const { return subsystems_; }
  const Topology& topology() const { return topology_; }

  int state_offset(int i) const { return state_offset_[i]; }
  int input_offset(int i) const { return input_offset_[i]; }
  int dict_offset(int i) const { return dict_offset_[i]; }
  int state_dim() const { return state_offset_.back(); }
  int input_dim() const { return input_offset_.back(); }
  int dict_dim() const { return dict_offset_.back(); }

  /// Width of w_i (sum of neighbor state dimensions).
  int psi(int i) const { return psi_[i]; }

  /// D_i (n_i x psi_i), materialized on demand in ascending-neighbor order.
  Eigen::MatrixXd coupling_matrix(int i) const;

  /// w_i gathered from the stacked network state.
  void gather_w(int i, std::span<const double> x, std::span<double> w) const;
  Eigen::VectorXd gather_w(int i, const Eigen::VectorXd& x) const;

  /// Block matrix with A_i on the diagonal and D_ij padded with zeros to
  /// width z_j off the diagonal (rows: stacked states, cols: stacked Z).
  Eigen::SparseMatrix<double> assembled_A() const;
  /// Block-diagonal input matrix.
  Eigen::SparseMatrix<double> assembled_B() const;
  /// Dense block (i, j) of an assembled matrix laid out like assembled_A().
  Eigen::MatrixXd block(const Eigen::SparseMatrix<double>& assembled, int i,
                        int j) const;

  /// out_i += sum over edges (j -> i) of D_ij x_j, in ascending j order.
  void add_coupling(int i, std::span<const double> x, double* out) const;

  /// Stacked right-hand side for a stacked input u (length input_dim()).
  void rhs(std::span<const double> x, std::span<const double> u, double t,
           bool perturbed, std::span<double> xdot) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t,
                      bool perturbed) const;

  /// Groups subsystems whose dynamics and coupling matrix D_i coincide, so
  /// one certificate can serve the whole group. Returns, per subsystem, the
  /// index of its group representative (the smallest member).
  std::vector<int> equivalence_classes() const;

 private:
  std::vector<SubsystemModel> subsystems_;
  Topology topology_;
  std::vector<int> state_offset_;
  std::vector<int> input_offset_;
  std::vector<int> dict_offset_;
  std::vector<int> psi_;
};

}  // namespace ismnet
