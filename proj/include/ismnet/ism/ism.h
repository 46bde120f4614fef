#pragma once

#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "ismnet/experiment/experiment.h"

namespace ismnet {

enum class Regularization { kIdealSign, kBoundaryLayer };

std::string_view regularization_name(Regularization mode);
Regularization parse_regularization(std::string_view name);

struct IsmOptions {
  std::optional<Eigen::MatrixXd> C;  // override of the default B_hat^T
  double margin = 0.1;
  Regularization mode = Regularization::kBoundaryLayer;
  double eps_bl = 1e-3;

  void validate() const;
};

/// Integral sliding-mode component of one subsystem. sigma = C x + zeta,
/// with zeta(t0) = -C x(t0) so that sigma starts at zero.
struct IsmController {
  Eigen::MatrixXd C;   // m x n
  Eigen::MatrixXd CB;  // C B_hat
  double cb_min = 0.0; // extreme eigenvalues of sym(C B_hat)
  double cb_max = 0.0;
  double theta = 0.0;
  double gamma_sup = 0.0;
  Regularization mode = Regularization::kBoundaryLayer;
  double eps_bl = 1e-3;

  int input_dim() const { return static_cast<int>(C.rows()); }
  int state_dim() const { return static_cast<int>(C.cols()); }

  /// Expected bound on |sigma| in closed loop with integration step h.
  double sliding_band(double h) const;
};

/// B_hat^T by default; an override must make sym(C B_hat) positive
/// definite (tolerance 1e-10), otherwise ConfigError.
Eigen::MatrixXd design_C(const Eigen::MatrixXd& B_hat,
                         const std::optional<Eigen::MatrixXd>& override_C = std::nullopt);

/// Gamma_sup * lambda_max / lambda_min of sym(C B_hat): the gain must
/// strictly exceed this.
double theta_lower_bound(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B_hat,
                         double gamma_sup);

double design_theta(const Eigen::MatrixXd& C, const Eigen::MatrixXd& B_hat, double gamma_sup,
                    double margin = 0.1);

IsmController design_ism(const Eigen::MatrixXd& B_hat, double gamma_sup,
                         const IsmOptions& opt = {});

/// zeta' = -C (rep(x) + D w).
Eigen::VectorXd transient_rhs(const Eigen::MatrixXd& C, const ClosedLoopRep& rep,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                              const Eigen::MatrixXd& D);

/// Unit-vector law -Theta sigma / |sigma| (ideal) or
/// -Theta sigma / max(|sigma|, eps_bl) (boundary layer); 0 at sigma = 0.
Eigen::VectorXd ism_control(const IsmController& ctrl, const Eigen::VectorXd& sigma);
void ism_control(const IsmController& ctrl, std::span<const double> sigma,
                 std::span<double> out);

}  // namespace ismnet
