#include <atomic>
#include <cstdlib>
#include <cstring>

#include "bergman/error.hpp"
#include "bergman/kernels.hpp"

namespace bergman::kernels {
namespace {

constexpr Table kScalar{Isa::scalar, scalar::one_minus_rho_sum, scalar::log_rho_sum,
                        scalar::real_series, scalar::complex_series};
#ifdef BERGMAN_HAVE_AVX2
constexpr Table kAvx2{Isa::avx2, avx2::one_minus_rho_sum, avx2::log_rho_sum, avx2::real_series,
                      avx2::complex_series};
#endif

const Table* initial_table() noexcept {
  const char* env = std::getenv("BERGMAN_ISA");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &kScalar;
#ifdef BERGMAN_HAVE_AVX2
  if (supported(Isa::avx2)) return &kAvx2;
#endif
  return &kScalar;
}

std::atomic<const Table*>& current() noexcept {
  static std::atomic<const Table*> t{initial_table()};
  return t;
}

}  // namespace

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#ifdef BERGMAN_HAVE_AVX2
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const Table& table(Isa isa) {
  if (!supported(isa)) throw ValidationError("instruction set not available: " + std::string(name(isa)));
#ifdef BERGMAN_HAVE_AVX2
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

const Table& active() noexcept { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_relaxed); }

std::string_view name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace bergman::kernels
