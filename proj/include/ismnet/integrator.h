#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "ismnet/kernels/kernels.h"

namespace ismnet {

enum class Scheme { kRk4, kEuler };

std::string_view scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view name);

/// Fixed-step explicit integrator over a flat state vector. The stage
/// combinations run through the active SIMD kernel table.
class FixedStepIntegrator {
 public:
  FixedStepIntegrator(Scheme scheme, std::size_t dim)
      : scheme_(scheme), k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  Scheme scheme() const { return scheme_; }

  /// Advances x in place from t to t + h. `f(t, x, dxdt)` fills dxdt.
  template <class F>
  void step(F&& f, double t, double h, std::span<double> x) {
    const auto& k = kernels::active();
    const std::size_t n = x.size();
    if (scheme_ == Scheme::kEuler) {
      f(t, std::span<const double>(x), std::span<double>(k1_));
      k.axpy(x.data(), h, k1_.data(), x.data(), n);
      return;
    }
    f(t, std::span<const double>(x), std::span<double>(k1_));
    k.axpy(x.data(), 0.5 * h, k1_.data(), tmp_.data(), n);
    f(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k2_));
    k.axpy(x.data(), 0.5 * h, k2_.data(), tmp_.data(), n);
    f(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k3_));
    k.axpy(x.data(), h, k3_.data(), tmp_.data(), n);
    f(t + h, std::span<const double>(tmp_), std::span<double>(k4_));
    k.rk4_combine(x.data(), k1_.data(), k2_.data(), k3_.data(), k4_.data(), h / 6.0,
                  x.data(), n);
  }

 private:
  Scheme scheme_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace ismnet
