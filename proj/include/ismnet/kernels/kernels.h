#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and vector variants (AVX2 on x86-64, NEON on aarch64) that
// perform the same floating-point operations in the same order per element,
// so all variants agree bit-for-bit. The active variant is picked once at
// startup from the CPU features; ISMNET_KERNELS=scalar|avx2|neon overrides.

#include <cstddef>
#include <span>
#include <string_view>

namespace ismnet::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  // y = x + a * k
  void (*axpy)(const double* x, double a, const double* k, double* y,
               std::size_t n);
  // y = x + c * (((k1 + 2 k2) + 2 k3) + k4), with c = h / 6.
  void (*rk4_combine)(const double* x, const double* k1, const double* k2,
                      const double* k3, const double* k4, double c, double* y,
                      std::size_t n);
  // out[s] = x_s^T P_s x_s for `count` blocks of dimension n. x is stored
  // block after block (count * n), P likewise (count * n * n, row-major).
  void (*quadratic_forms)(const double* x, const double* p, std::size_t count,
                          std::size_t n, double* out);
  // Same as quadratic_forms but one shared P for every block.
  void (*shared_quadratic_forms)(const double* x, const double* p,
                                 std::size_t count, std::size_t n,
                                 double* out);
  // out_s = M x_s for `count` column vectors x_s of length `cols`;
  // M is rows x cols row-major, out is count * rows.
  void (*batched_matvec)(const double* m, std::size_t rows, std::size_t cols,
                         const double* xs, std::size_t count, double* out);
};

/// Whether `isa` is compiled in and supported by the running CPU.
bool available(Isa isa);

/// Kernel table of a specific variant. Throws if unavailable.
const KernelTable& table(Isa isa);

/// Variant used by the library.
Isa active_isa();
const KernelTable& active();

/// Override the active variant (tests, benchmarks). Throws if unavailable.
void select(Isa isa);

// Convenience wrappers over the active table.

inline void axpy(std::span<const double> x, double a, std::span<const double> k,
                 std::span<double> y) {
  active().axpy(x.data(), a, k.data(), y.data(), y.size());
}

inline void rk4_combine(std::span<const double> x, std::span<const double> k1,
                        std::span<const double> k2, std::span<const double> k3,
                        std::span<const double> k4, double h,
                        std::span<double> y) {
  active().rk4_combine(x.data(), k1.data(), k2.data(), k3.data(), k4.data(),
                       h / 6.0, y.data(), y.size());
}

namespace detail {
const KernelTable& scalar_table();
#if defined(ISMNET_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(ISMNET_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace ismnet::kernels
