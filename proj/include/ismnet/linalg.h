#pragma once

#include <Eigen/Dense>

namespace ismnet::linalg {

/// Relative singular-value cutoff used for numerical rank and pseudoinverses.
inline constexpr double kRankCutoff = 1e-8;

/// Numerical rank: number of singular values above cutoff * sigma_max.
int numerical_rank(const Eigen::MatrixXd& m, double cutoff = kRankCutoff);

/// Moore-Penrose pseudoinverse via SVD, discarding singular values below
/// cutoff * sigma_max.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double cutoff = kRankCutoff);

/// Orthonormal basis of ker(m) (columns), using the same rank cutoff.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& m,
                           double cutoff = kRankCutoff);

/// Operator 2-norm. Empty matrices have norm 0.
double spectral_norm(const Eigen::MatrixXd& m);

/// Largest absolute entry; 0 for empty matrices.
double max_abs(const Eigen::MatrixXd& m);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme eigenvalues of the symmetric part (m + m^T) / 2.
EigenRange symmetric_eigen_range(const Eigen::MatrixXd& m);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace ismnet::linalg
