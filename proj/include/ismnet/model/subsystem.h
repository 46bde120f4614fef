#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "ismnet/model/dictionary.h"

namespace ismnet {

/// Matched perturbation gamma(x, t): channel k carries
/// amplitude * sin(frequency * t + phase + k * channel_phase_step), clipped so
/// that |gamma| never exceeds gamma_sup. Pure in (t, phase); the phase may be
/// derived from a seed by the caller.
struct Perturbation {
  double amplitude = 0.0;
  double frequency = 0.0;  // rad/s
  double phase = 0.0;
  double channel_phase_step = 0.0;
  double gamma_sup = 0.0;

  void eval(double t, std::span<double> out) const;
  Eigen::VectorXd eval(int channels, double t) const;

  /// Shortest period of the signal; infinity for a constant signal.
  double period() const;

  /// Copy with the phase shifted by a deterministic function of (seed, index).
  Perturbation with_seeded_phase(std::uint64_t seed, int index) const;
};

/// Ground-truth model of one subsystem:
///   dx/dt = A Z(x) + B u + D w + B gamma(x, t).
/// Only the simulator and test oracles see A; synthesis works from data.
class SubsystemModel {
 public:
  SubsystemModel(std::shared_ptr<const Dictionary> dictionary, Eigen::MatrixXd A,
                 Eigen::MatrixXd B, Perturbation perturbation = {});

  int state_dim() const { return dictionary_->state_dim(); }
  int input_dim() const { return static_cast<int>(B_.cols()); }
  int dict_size() const { return dictionary_->size(); }

  const Dictionary& dictionary() const { return *dictionary_; }
  const std::shared_ptr<const Dictionary>& dictionary_ptr() const { return dictionary_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Perturbation& perturbation() const { return perturbation_; }

  /// Same dynamics, perturbation, dictionary (by value).
  bool same_dynamics(const SubsystemModel& other) const;

 private:
  std::shared_ptr<const Dictionary> dictionary_;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  Perturbation perturbation_;
};

/// Right-hand side A Z(x) + B u + D w (+ B gamma(x, t) when perturbed).
Eigen::VectorXd subsystem_rhs(const SubsystemModel& model, const Eigen::MatrixXd& D,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& w, double t, bool perturbed);

}  // namespace ismnet
