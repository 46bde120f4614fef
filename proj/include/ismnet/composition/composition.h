#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ismnet/model/topology.h"
#include "ismnet/synthesis/synthesis.h"

namespace ismnet {

/// The four numbers of one certificate that the small-gain test uses.
struct IssConstants {
  double kappa = 0.0;
  double rho = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  static IssConstants from(const IssCertificate& cert);
};

/// H = diag(kappa), rho_hat(i, j) = rho_i / alpha1_j and
/// Xi_j = -kappa_j + sum_i rho_hat(i, j).
///
/// By default only stored influence pairs (edge j -> i) carry rho_hat;
/// strict_dense fills every off-diagonal pair. The dense matrix is never
/// materialized: rho_hat(i, j) evaluates it on demand.
struct SmallGainData {
  Eigen::VectorXd kappa;
  Eigen::VectorXd rho;
  Eigen::VectorXd alpha1;
  Eigen::VectorXd Xi;
  bool strict_dense = false;
  std::shared_ptr<const Topology> topology;

  int size() const { return static_cast<int>(Xi.size()); }
  double rho_hat(int i, int j) const;
  /// Sparse rho_hat on the stored edges (empty pattern for strict_dense).
  Eigen::SparseMatrix<double> rho_hat_sparse() const;
};

SmallGainData smallgain_matrix(std::span<const IssConstants> constants, const Topology& topology,
                               bool strict_dense = false);

/// Column sums of (-H + rho_hat) by explicit accumulation over every
/// entry. Quadratic in N for strict_dense; used to cross-check Xi.
Eigen::VectorXd column_sums(const SmallGainData& data);

struct SmallGainVerdict {
  bool feasible = false;
  double kappa = 0.0;   // -max Xi when feasible
  double max_xi = 0.0;
  int argmax = -1;
  std::string hint;     // non-empty when infeasible
};

SmallGainVerdict check_smallgain(const Eigen::VectorXd& Xi);

/// Network Lyapunov function V(x) = sum_i x_i^T P_i x_i with the constants
/// of the composed network.
class NetworkClf {
 public:
  NetworkClf(std::vector<Eigen::MatrixXd> blocks, std::vector<int> block_of, double alpha1,
             double alpha2, double kappa);

  int size() const { return static_cast<int>(block_of_.size()); }
  int state_dim() const { return offsets_.back(); }
  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }
  double kappa() const { return kappa_; }
  const Eigen::MatrixXd& P(int i) const { return blocks_[block_of_[i]]; }

  double value(std::span<const double> x) const;
  double value(const Eigen::VectorXd& x) const;
  /// 2 blkdiag(P_i) x.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

 private:
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> row_major_;
  std::vector<int> block_of_;
  std::vector<int> offsets_;
  bool shared_ = false;
  double alpha1_, alpha2_, kappa_;
};

/// Per-subsystem certificates (shared between identical subsystems) plus
/// the small-gain data of the whole network.
struct NetworkCertificate {
  std::vector<IssCertificate> certs;  // distinct certificates
  std::vector<int> cert_of;           // subsystem -> index into certs
  SmallGainData smallgain;
  SmallGainVerdict verdict;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  bool feasible() const { return verdict.feasible; }
  double kappa() const { return verdict.kappa; }
  const IssCertificate& cert(int i) const { return certs[cert_of[i]]; }
  /// Throws InfeasibleError when the small-gain condition fails.
  NetworkClf clf() const;
};

NetworkCertificate compose(std::vector<IssCertificate> certs, std::vector<int> cert_of,
                           const Topology& topology, bool strict_dense = false);

}  // namespace ismnet
