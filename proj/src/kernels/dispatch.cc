#include <atomic>
#include <cstdlib>
#include <string>

#include "ismnet/error.h"
#include "ismnet/kernels/kernels.h"

namespace ismnet::kernels {

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(ISMNET_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(ISMNET_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect() {
  if (const char* env = std::getenv("ISMNET_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && cpu_supports(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "neon" && cpu_supports(Isa::kNeon)) return Isa::kNeon;
  }
  if (cpu_supports(Isa::kAvx2)) return Isa::kAvx2;
  if (cpu_supports(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

struct ActiveVariant {
  std::atomic<Isa> isa;
  std::atomic<const KernelTable*> kernels;
};

ActiveVariant& current();

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool available(Isa isa) { return cpu_supports(isa); }

const KernelTable& table(Isa isa) {
  if (!available(isa)) {
    throw Error("kernel variant '" + std::string(isa_name(isa)) +
                "' is not available on this machine");
  }
  switch (isa) {
#if defined(ISMNET_HAVE_AVX2)
    case Isa::kAvx2:
      return detail::avx2_table();
#endif
#if defined(ISMNET_HAVE_NEON)
    case Isa::kNeon:
      return detail::neon_table();
#endif
    default:
      return detail::scalar_table();
  }
}

namespace {

ActiveVariant& current() {
  static ActiveVariant state{detect(), &table(detect())};
  return state;
}

}  // namespace

Isa active_isa() { return current().isa.load(std::memory_order_relaxed); }

const KernelTable& active() {
  return *current().kernels.load(std::memory_order_relaxed);
}

void select(Isa isa) {
  const KernelTable& t = table(isa);
  current().isa.store(isa, std::memory_order_relaxed);
  current().kernels.store(&t, std::memory_order_relaxed);
}

}  // namespace ismnet::kernels
