#include <cmath>
#include <limits>

#include "bergman/kernels.hpp"

namespace bergman::kernels::scalar {

double one_minus_rho_sum(double zr, double zi, const double* re, const double* im, std::size_t n) {
  const double omz = 1.0 - (zr * zr + zi * zi);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dr = zr - re[j];
    const double di = zi - im[j];
    const double ar = 1.0 - (re[j] * zr + im[j] * zi);
    const double ai = re[j] * zi - im[j] * zr;
    const double den = ar * ar + ai * ai;
    const double rho2 = (dr * dr + di * di) / den;
    const double omr2 = omz * (1.0 - (re[j] * re[j] + im[j] * im[j])) / den;
    // Take rho from whichever of rho^2 and 1 - rho^2 is not a cancellation.
    const double rho = rho2 < 0.5 ? std::sqrt(rho2) : std::sqrt(std::fmax(0.0, 1.0 - omr2));
    sum += omr2 / (1.0 + rho);
  }
  return sum;
}

double log_rho_sum(double zr, double zi, const double* re, const double* im, std::size_t n) {
  const double omz = 1.0 - (zr * zr + zi * zi);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dr = zr - re[j];
    const double di = zi - im[j];
    const double num = dr * dr + di * di;
    if (num == 0.0) return -std::numeric_limits<double>::infinity();
    const double ar = 1.0 - (re[j] * zr + im[j] * zi);
    const double ai = re[j] * zi - im[j] * zr;
    const double den = ar * ar + ai * ai;
    const double rho2 = num / den;
    if (rho2 < 0.5) {
      sum += 0.5 * std::log(rho2);
    } else {
      sum += 0.5 * std::log1p(-omz * (1.0 - (re[j] * re[j] + im[j] * im[j])) / den);
    }
  }
  return sum;
}

void real_series(const double* coef, std::size_t ncoef, const double* x, double* out,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = ncoef; k-- > 0;) acc = acc * x[i] + coef[k];
    out[i] = acc;
  }
}

void complex_series(const double* coef, std::size_t ncoef, const double* wr, const double* wi,
                    double* out_re, double* out_im, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double ar = 0.0;
    double ai = 0.0;
    for (std::size_t k = ncoef; k-- > 0;) {
      const double tr = ar * wr[i] - ai * wi[i] + coef[k];
      ai = ar * wi[i] + ai * wr[i];
      ar = tr;
    }
    out_re[i] = ar;
    out_im[i] = ai;
  }
}

}  // namespace bergman::kernels::scalar
