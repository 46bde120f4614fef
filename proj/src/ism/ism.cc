#include "ismnet/ism/ism.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ismnet/error.h"
#include "ismnet/linalg.h"

namespace ismnet {

std::string_view regularization_name(Regularization mode) {
  return mode == Regularization::kIdealSign ? "ideal_sign" : "boundary_layer";
}

Regularization parse_regularization(std::string_view name) {
  if (name == "ideal_sign") return Regularization::kIdealSign;
  if (name == "boundary_layer") return Regularization::kBoundaryLayer;
  throw ConfigError("unknown ISM regularization '" + std::string(name) + "'");
}

void IsmOptions::validate() const {
  if (!(margin > 0.0)) throw ConfigError("ISM margin must be > 0");
  if (!(eps_bl > 0.0)) throw ConfigError("boundary-layer width must be > 0");
}

double IsmController::sliding_band(double h) const {
  if (mode == Regularization::kBoundaryLayer) return eps_bl * (1.0 + gamma_sup / theta);
  return 10.0 * h * theta;
}

Eigen::MatrixXd design_C(const Eigen::MatrixXd& B_hat, const std::optional<Eigen::MatrixXd>& override_C) {
  if (B_hat.size() == 0 || linalg::max_abs(B_hat) == 0.0) {
    throw DomainError("design_C: B_hat is zero");
  }
  if (!override_C) {
    const auto r = linalg::symmetric_eigen_range(B_hat.transpose() * B_hat);
    if (!(r.min > 1e-10)) throw RankError("B_hat lacks full column rank; C = B_hat^T is singular");
    return B_hat.transpose();
  }
  const Eigen::MatrixXd& C = *override_C;
  if (C.rows() != B_hat.cols() || C.cols() != B_hat.rows()) {
    throw DimensionError("sliding-output override must be m x n");
  }
  const auto r = linalg::symmetric_eigen_range(C * B_hat);
  if (!(r.min > 1e-10)) {
    throw ConfigError("sliding-output override rejected: lambda_min of sym(C B_hat) is " +
                      std::to_string(r.min));
  }
  return C;
}

double theta_lower_bound(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B_hat, double gamma_sup) {
  if (gamma_sup < 0.0) throw DomainError("Gamma_sup must be >= 0");
  const auto r = linalg::symmetric_eigen_range(C * B_hat);
  if (!(r.min > 0.0)) throw DomainError("sym(C B_hat) is not positive definite");
  return gamma_sup * r.max / r.min;
}

double design_theta(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B_hat, double gamma_sup,
                    double margin) {
  if (!(margin > 0.0)) throw DomainError("ISM margin must be > 0");
  return theta_lower_bound(C, B_hat, gamma_sup) + margin;
}

IsmController design_ism(const Eigen::MatrixXd& B_hat, double gamma_sup, const IsmOptions& opt) {
  opt.validate();
  IsmController c;
  c.C = design_C(B_hat, opt.C);
  c.CB = c.C * B_hat;
  const auto r = linalg::symmetric_eigen_range(c.CB);
  c.cb_min = r.min;
  c.cb_max = r.max;
  c.theta = design_theta(c.C, B_hat, gamma_sup, opt.margin);
  c.gamma_sup = gamma_sup;
  c.mode = opt.mode;
  c.eps_bl = opt.eps_bl;
  return c;
}

Eigen::VectorXd transient_rhs(const Eigen::MatrixXd& C, const ClosedLoopRep& rep,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                              const Eigen::MatrixXd& D) {
  if (C.cols() != x.size() || D.rows() != x.size() || D.cols() != w.size()) {
    throw DimensionError("transient_rhs: inconsistent C/x/D/w dimensions");
  }
  Eigen::VectorXd f = rep(x);
  if (w.size() > 0) f += D * w;
  return -C * f;
}

void ism_control(const IsmController& ctrl, std::span<const double> sigma, std::span<double> out) {
  double norm2 = 0.0;
  for (double s : sigma) norm2 += s * s;
  const double norm = std::sqrt(norm2);
  if (norm == 0.0) {
    for (auto& o : out) o = 0.0;
    return;
  }
  const double denom = ctrl.mode == Regularization::kBoundaryLayer ? std::max(norm, ctrl.eps_bl) : norm;
  const double g = -ctrl.theta / denom;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = g * sigma[k];
}

Eigen::VectorXd ism_control(const IsmController& ctrl, const Eigen::VectorXd& sigma) {
  if (sigma.size() != ctrl.input_dim()) throw DimensionError("ism_control: sigma has wrong length");
  Eigen::VectorXd out(sigma.size());
  ism_control(ctrl, std::span<const double>(sigma.data(), sigma.size()),
              std::span<double>(out.data(), out.size()));
  return out;
}

}  // namespace ismnet
