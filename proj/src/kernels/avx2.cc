// Compiled with -mavx2 (and without FMA contraction); only called when the
// CPU reports AVX2 support.
#include <immintrin.h>

#include "ismnet/kernels/kernels.h"

namespace ismnet::kernels::detail {

namespace {

inline __m256d strided_load(const double* base, std::size_t stride) {
  return _mm256_set_pd(base[3 * stride], base[2 * stride], base[stride],
                       base[0]);
}

inline void strided_store(double* base, std::size_t stride, __m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  for (std::size_t j = 0; j < 4; ++j) base[j * stride] = lanes[j];
}

void axpy(const double* x, double a, const double* k, double* y,
          std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(k + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), prod));
  }
  for (; i < n; ++i) y[i] = x[i] + a * k[i];
}

void rk4_combine(const double* x, const double* k1, const double* k2,
                 const double* k3, const double* k4, double c, double* y,
                 std::size_t n) {
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s = _mm256_add_pd(_mm256_loadu_pd(k1 + i),
                              _mm256_mul_pd(two, _mm256_loadu_pd(k2 + i)));
    s = _mm256_add_pd(s, _mm256_mul_pd(two, _mm256_loadu_pd(k3 + i)));
    s = _mm256_add_pd(s, _mm256_loadu_pd(k4 + i));
    _mm256_storeu_pd(y + i,
                     _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(vc, s)));
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
  for (; s + 4 <= count; s += 4) {
    __m256d acc = _mm256_setzero_pd();
    const double* xb = x + s * n;
    for (std::size_t r = 0; r < n; ++r) {
      const __m256d xr = strided_load(xb + r, n);
      for (std::size_t c = 0; c < n; ++c) {
        const __m256d pc = kShared ? _mm256_set1_pd(p[r * n + c])
                                   : strided_load(p + s * nn + r * n + c, nn);
        const __m256d xc = strided_load(xb + c, n);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(xr, _mm256_mul_pd(pc, xc)));
      }
    }
    _mm256_storeu_pd(out + s, acc);
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
  for (; s + 4 <= count; s += 4) {
    const double* xb = xs + s * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t c = 0; c < cols; ++c) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(m[r * cols + c]),
                                               strided_load(xb + c, cols)));
      }
      strided_store(out + s * rows + r, rows, acc);
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

const KernelTable& avx2_table() {
  static const KernelTable t{axpy, rk4_combine, quadratic_forms,
                             shared_quadratic_forms, batched_matvec};
  return t;
}

}  // namespace ismnet::kernels::detail
