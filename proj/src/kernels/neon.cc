// aarch64 variant; Advanced SIMD is mandatory on that architecture.
#include <arm_neon.h>

#include "ismnet/kernels/kernels.h"

namespace ismnet::kernels::detail {

namespace {

inline float64x2_t strided_load(const double* base, std::size_t stride) {
  const double lanes[2] = {base[0], base[stride]};
  return vld1q_f64(lanes);
}

void axpy(const double* x, double a, const double* k, double* y,
          std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(va, vld1q_f64(k + i))));
  }
  for (; i < n; ++i) y[i] = x[i] + a * k[i];
}

void rk4_combine(const double* x, const double* k1, const double* k2,
                 const double* k3, const double* k4, double c, double* y,
                 std::size_t n) {
  const float64x2_t two = vdupq_n_f64(2.0);
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t s = vaddq_f64(vld1q_f64(k1 + i), vmulq_f64(two, vld1q_f64(k2 + i)));
    s = vaddq_f64(s, vmulq_f64(two, vld1q_f64(k3 + i)));
    s = vaddq_f64(s, vld1q_f64(k4 + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(vc, s)));
  }
  for (; i < n; ++i) {
    double s = k1[i] + 2.0 * k2[i];
    s = s + 2.0 * k3[i];
    s = s + k4[i];
    y[i] = x[i] + c * s;
  }
}

template <bool kShared>
void quadratic_forms_impl(const double* x, const double* p, std::size_t count,
                          std::size_t n, double* out) {
  const std::size_t nn = n * n;
  std::size_t s = 0;
  for (; s + 2 <= count; s += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    const double* xb = x + s * n;
    for (std::size_t r = 0; r < n; ++r) {
      const float64x2_t xr = strided_load(xb + r, n);
      for (std::size_t c = 0; c < n; ++c) {
        const float64x2_t pc = kShared ? vdupq_n_f64(p[r * n + c])
                                       : strided_load(p + s * nn + r * n + c, nn);
        acc = vaddq_f64(acc, vmulq_f64(xr, vmulq_f64(pc, strided_load(xb + c, n))));
      }
    }
    vst1q_f64(out + s, acc);
  }
  for (; s < count; ++s) {
    const double* xs = x + s * n;
    const double* ps = kShared ? p : p + s * nn;
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        acc = acc + xs[r] * (ps[r * n + c] * xs[c]);
      }
    }
    out[s] = acc;
  }
}

void quadratic_forms(const double* x, const double* p, std::size_t count,
                     std::size_t n, double* out) {
  quadratic_forms_impl<false>(x, p, count, n, out);
}

void shared_quadratic_forms(const double* x, const double* p,
                            std::size_t count, std::size_t n, double* out) {
  quadratic_forms_impl<true>(x, p, count, n, out);
}

void batched_matvec(const double* m, std::size_t rows, std::size_t cols,
                    const double* xs, std::size_t count, double* out) {
  std::size_t s = 0;
  for (; s + 2 <= count; s += 2) {
    const double* xb = xs + s * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      float64x2_t acc = vdupq_n_f64(0.0);
      for (std::size_t c = 0; c < cols; ++c) {
        acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(m[r * cols + c]),
                                       strided_load(xb + c, cols)));
      }
      out[s * rows + r] = vgetq_lane_f64(acc, 0);
      out[(s + 1) * rows + r] = vgetq_lane_f64(acc, 1);
    }
  }
  for (; s < count; ++s) {
    const double* x = xs + s * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc = acc + m[r * cols + c] * x[c];
      out[s * rows + r] = acc;
    }
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable t{axpy, rk4_combine, quadratic_forms,
                             shared_quadratic_forms, batched_matvec};
  return t;
}

}  // namespace ismnet::kernels::detail
