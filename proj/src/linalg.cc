#include "ismnet/linalg.h"

#include <algorithm>
#include <cmath>

namespace ismnet::linalg {

namespace {

Eigen::JacobiSVD<Eigen::MatrixXd> full_svd(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
}

int rank_from_singular_values(const Eigen::VectorXd& sv, double cutoff) {
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double threshold = cutoff * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++r;
  }
  return r;
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& m, double cutoff) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return rank_from_singular_values(svd.singularValues(), cutoff);
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double cutoff) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  const auto svd = full_svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  const int r = rank_from_singular_values(sv, cutoff);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.cols(), m.rows());
  for (int i = 0; i < r; ++i) {
    out.noalias() +=
        (svd.matrixV().col(i) / sv(i)) * svd.matrixU().col(i).transpose();
  }
  return out;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double cutoff) {
  if (m.rows() == 0) return Eigen::MatrixXd::Identity(m.cols(), m.cols());
  const auto svd = full_svd(m);
  const int r = rank_from_singular_values(svd.singularValues(), cutoff);
  return svd.matrixV().rightCols(m.cols() - r);
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

EigenRange symmetric_eigen_range(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m),
                                                    Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

}  // namespace ismnet::linalg
