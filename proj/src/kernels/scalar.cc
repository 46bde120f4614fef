#include "ismnet/kernels/kernels.h"

namespace ismnet::kernels::detail {

namespace {

void axpy(const double* x, double a, const double* k, double* y,
          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * k[i];
}

void rk4_combine(const double* x, const double* k1, const double* k2,
                 const double* k3, const double* k4, double c, double* y,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = k1[i] + 2.0 * k2[i];
    s = s + 2.0 * k3[i];
    s = s + k4[i];
    y[i] = x[i] + c * s;
  }
}

// Reference order: acc = sum over r, then c, of x_r * (P_rc * x_c).
double quadratic_form(const double* x, const double* p, std::size_t n) {
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      acc = acc + x[r] * (p[r * n + c] * x[c]);
    }
  }
  return acc;
}

void quadratic_forms(const double* x, const double* p, std::size_t count,
                     std::size_t n, double* out) {
  for (std::size_t s = 0; s < count; ++s) {
    out[s] = quadratic_form(x + s * n, p + s * n * n, n);
  }
}

void shared_quadratic_forms(const double* x, const double* p,
                            std::size_t count, std::size_t n, double* out) {
  for (std::size_t s = 0; s < count; ++s) {
    out[s] = quadratic_form(x + s * n, p, n);
  }
}

void batched_matvec(const double* m, std::size_t rows, std::size_t cols,
                    const double* xs, std::size_t count, double* out) {
  for (std::size_t s = 0; s < count; ++s) {
    const double* x = xs + s * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc = acc + m[r * cols + c] * x[c];
      out[s * rows + r] = acc;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{axpy, rk4_combine, quadratic_forms,
                             shared_quadratic_forms, batched_matvec};
  return t;
}

}  // namespace ismnet::kernels::detail
