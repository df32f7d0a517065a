#pragma once

#include <cstddef>
#include <string_view>

// Hot loops shared by the density, Blaschke and kernel-series code. Each has
// a scalar reference and, on x86-64, an AVX2/FMA variant picked at runtime.
namespace bergman::kernels {

enum class Isa { scalar, avx2 };

/// Sum over j of 1 - rho(z, lambda_j) for points given as re/im arrays.
using OneMinusRhoSumFn = double (*)(double zr, double zi, const double* re, const double* im,
                                    std::size_t n);
/// Sum over j of log rho(z, lambda_j); -inf when z hits a point.
using LogRhoSumFn = double (*)(double zr, double zi, const double* re, const double* im,
                               std::size_t n);
/// out[i] = sum_{k<ncoef} coef[k] * x[i]^k.
using RealSeriesFn = void (*)(const double* coef, std::size_t ncoef, const double* x, double* out,
                              std::size_t n);
/// out[i] = sum_{k<ncoef} coef[k] * w[i]^k for complex w given as re/im arrays.
using ComplexSeriesFn = void (*)(const double* coef, std::size_t ncoef, const double* wr,
                                 const double* wi, double* out_re, double* out_im, std::size_t n);

struct Table {
  Isa isa;
  OneMinusRhoSumFn one_minus_rho_sum;
  LogRhoSumFn log_rho_sum;
  RealSeriesFn real_series;
  ComplexSeriesFn complex_series;
};

[[nodiscard]] bool supported(Isa isa) noexcept;
/// Throws ValidationError when the ISA is unavailable on this machine.
[[nodiscard]] const Table& table(Isa isa);
/// Best supported table, unless BERGMAN_ISA=scalar is set or select() was called.
[[nodiscard]] const Table& active() noexcept;
void select(Isa isa);
[[nodiscard]] std::string_view name(Isa isa) noexcept;

namespace scalar {
double one_minus_rho_sum(double, double, const double*, const double*, std::size_t);
double log_rho_sum(double, double, const double*, const double*, std::size_t);
void real_series(const double*, std::size_t, const double*, double*, std::size_t);
void complex_series(const double*, std::size_t, const double*, const double*, double*, double*,
                    std::size_t);
}  // namespace scalar

namespace avx2 {
double one_minus_rho_sum(double, double, const double*, const double*, std::size_t);
double log_rho_sum(double, double, const double*, const double*, std::size_t);
void real_series(const double*, std::size_t, const double*, double*, std::size_t);
void complex_series(const double*, std::size_t, const double*, const double*, double*, double*,
                    std::size_t);
}  // namespace avx2

}  // namespace bergman::kernels
