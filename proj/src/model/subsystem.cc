#include "ismnet/model/subsystem.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "ismnet/error.h"

namespace ismnet {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void Perturbation::eval(double t, std::span<double> out) const {
  double norm2 = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = amplitude *
             std::sin(frequency * t + phase + static_cast<double>(k) * channel_phase_step);
    norm2 += out[k] * out[k];
  }
  const double norm = std::sqrt(norm2);
  if (norm > gamma_sup) {
    const double scale = norm > 0.0 ? gamma_sup / norm : 0.0;
    for (double& v : out) v *= scale;
  }
}

Eigen::VectorXd Perturbation::eval(int channels, double t) const {
  Eigen::VectorXd out(channels);
  eval(t, std::span<double>(out.data(), channels));
  return out;
}

double Perturbation::period() const {
  if (frequency == 0.0 || amplitude == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return 2.0 * std::numbers::pi / std::abs(frequency);
}

Perturbation Perturbation::with_seeded_phase(std::uint64_t seed, int index) const {
  Perturbation p = *this;
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
  p.phase += 2.0 * std::numbers::pi * static_cast<double>(h >> 11) * 0x1.0p-53;
  return p;
}

SubsystemModel::SubsystemModel(std::shared_ptr<const Dictionary> dictionary,
                               Eigen::MatrixXd A, Eigen::MatrixXd B,
                               Perturbation perturbation)
    : dictionary_(std::move(dictionary)),
      A_(std::move(A)),
      B_(std::move(B)),
      perturbation_(perturbation) {
  if (!dictionary_) throw DimensionError("subsystem needs a dictionary");
  const int n = dictionary_->state_dim();
  if (A_.rows() != n || A_.cols() != dictionary_->size()) {
    throw DimensionError("A must be n x z = " + std::to_string(n) + " x " +
                         std::to_string(dictionary_->size()) + ", got " +
                         std::to_string(A_.rows()) + " x " + std::to_string(A_.cols()));
  }
  if (B_.rows() != n || B_.cols() < 1) {
    throw DimensionError("B must have n = " + std::to_string(n) +
                         " rows and at least one column");
  }
  if (!(perturbation_.gamma_sup >= 0.0)) {
    throw ConfigError("perturbation bound gamma_sup must be >= 0");
  }
}

bool SubsystemModel::same_dynamics(const SubsystemModel& other) const {
  const bool same_phase = perturbation_.phase == other.perturbation_.phase;
  return (dictionary_ == other.dictionary_ || *dictionary_ == *other.dictionary_) &&
         A_ == other.A_ && B_ == other.B_ && same_phase &&
         perturbation_.amplitude == other.perturbation_.amplitude &&
         perturbation_.frequency == other.perturbation_.frequency &&
         perturbation_.gamma_sup == other.perturbation_.gamma_sup;
}

Eigen::VectorXd subsystem_rhs(const SubsystemModel& model, const Eigen::MatrixXd& D,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& w, double t, bool perturbed) {
  const int n = model.state_dim();
  if (x.size() != n || u.size() != model.input_dim() || D.rows() != n ||
      D.cols() != w.size()) {
    throw DimensionError("subsystem_rhs: inconsistent x/u/w/D dimensions");
  }
  Eigen::VectorXd xdot = model.A() * model.dictionary().eval(x) + model.B() * u;
  if (w.size() > 0) xdot += D * w;
  if (perturbed) xdot += model.B() * model.perturbation().eval(model.input_dim(), t);
  return xdot;
}

}  // namespace ismnet
