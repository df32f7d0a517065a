#include <cmath>
#include <vector>

#include <doctest.h>

#include "bergman/rng.hpp"
#include "bergman/space.hpp"

using namespace bergman;

namespace {

std::vector<Complex> random_poly(std::size_t degree, CounterRng& rng) {
  std::vector<Complex> a(degree + 1);
  for (auto& c : a) c = {rng.normal(), rng.normal()};
  return a;
}

}  // namespace

TEST_SUITE("space") {

TEST_CASE("monomial norms, geometric series oracle") {
  const auto km = monomial_norms(compute_radii(Weight::constant(), 40), 10);
  CHECK(km.coeff(0) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(km.coeff(1) == doctest::Approx(10.0 / 21.0).epsilon(1e-11));
  // sum 2^{-n}(1-2^{-n})^{2k} expanded binomially, truncated at n = 40.
  for (std::size_t k : {2u, 5u, 10u}) {
    double oracle = 0.0;
    for (std::size_t i = 0; i <= 2 * k; ++i)
      oracle += std::pow(-1.0, double(i)) * std::tgamma(2.0 * k + 1) / (std::tgamma(i + 1.0) * std::tgamma(2.0 * k - i + 1)) /
                (std::pow(2.0, double(i) + 1) - 1);
    CHECK(km.coeff(k) == doctest::Approx(oracle).epsilon(1e-9));
  }
  const auto degenerate = monomial_norms(RadiiSchedule::from_gaps({1.0, 1.0, 1.0}), 4);
  for (std::size_t k = 1; k <= 4; ++k) CHECK(degenerate.coeff(k) == 0.0);
}

TEST_CASE("polynomial norms") {
  const auto km = monomial_norms(compute_radii(Weight::constant(), 40), 8);
  const std::vector<Complex> one{1.0}, z{0.0, 1.0}, both{1.0, 1.0};
  CHECK(norm_poly(km, one) == doctest::Approx(km.coeff(0)));
  CHECK(norm_poly(km, z) == doctest::Approx(km.coeff(1)));
  CHECK(norm_poly(km, both) == doctest::Approx(1.0 + 10.0 / 21.0).epsilon(1e-10));
}

TEST_CASE("quadrature norms agree with coefficient norms") {
  const auto s = compute_radii(Weight::constant(), 12);
  const auto km = monomial_norms(s, 400);
  CHECK(norm_fn_quadrature(s, [](Complex) { return Complex{1.0}; }, 64) == doctest::Approx(km.coeff(0)));
  CHECK(norm_fn_quadrature(s, [](Complex z) { return z * z * z; }, 64) == doctest::Approx(km.coeff(3)).epsilon(1e-14));

  // (1 - conj(zeta) z)^{-3} against its binomial series.
  const Complex zeta = 0.9;
  const auto f = [zeta](Complex z) { return std::pow(1.0 - std::conj(zeta) * z, -3.0); };
  const double quad = norm_fn_quadrature(s, f, [](std::size_t n) { return std::size_t(64) << n; });
  CHECK(quad == doctest::Approx(test_function_norm(km, zeta, 3.0)).epsilon(0.01));

  CounterRng rng(7);
  const auto p = random_poly(20, rng), q = random_poly(20, rng);
  const auto pf = [&](Complex z) { return poly_eval(p, z); };
  const auto qf = [&](Complex z) { return poly_eval(q, z); };
  const Complex ip = inner_product_quadrature(s, pf, qf, 64);
  const Complex ic = inner_product_poly(km, p, q);
  CHECK(std::abs(ip - ic) <= 1e-10 * std::abs(ic));
}

TEST_CASE("kernel values") {
  const auto s = compute_radii(Weight::constant(), 12);
  const auto km = monomial_norms(s, 600);
  CHECK(std::abs(km.kernel(0.0, Complex{0.3, 0.2}).value - 1.0 / km.coeff(0)) < 1e-14);

  double brute = 0.0;
  for (std::size_t k = 0; k <= 400; ++k) brute += std::pow(0.25, double(k)) / km.coeff(k);
  CHECK(km.kernel(0.5, 0.5).value.real() == doctest::Approx(brute).epsilon(1e-12));
  CHECK(km.diag(0.5) == doctest::Approx(brute).epsilon(1e-12));

  // Hermitian symmetry and the row path matching pointwise evaluation.
  const Complex z{0.4, 0.5};
  const std::vector<Complex> zetas{{0.1, 0.0}, {0.8, -0.3}, {-0.95, 0.1}, {0.0, 0.6}};
  std::vector<Complex> row(zetas.size());
  km.kernel_row(z, zetas, row);
  for (std::size_t i = 0; i < zetas.size(); ++i) {
    CHECK(std::abs(row[i] - km.kernel(z, zetas[i]).value) <= 1e-12 * std::abs(row[i]));
    CHECK(std::abs(km.kernel(zetas[i], z).value - std::conj(row[i])) <= 1e-12 * std::abs(row[i]));
  }
  std::vector<double> d(zetas.size());
  km.diag_batch(zetas, d);
  for (std::size_t i = 0; i < zetas.size(); ++i) CHECK(d[i] == doctest::Approx(km.diag(zetas[i])).epsilon(1e-13));
}

TEST_CASE("reproducing property") {
  const auto s = compute_radii(Weight::constant(), 14);
  const auto km = monomial_norms(s, 600);
  CounterRng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_poly(100, rng);
    const Complex zeta = std::polar(s.radius(12) * rng.uniform(), kTwoPi * rng.uniform());
    const auto kz = kernel_coefficients(km, zeta);
    const Complex ip = inner_product_poly(km, p, kz);
    CHECK(std::abs(ip - poly_eval(p, zeta)) <= 1e-9 * std::abs(poly_eval(p, zeta)));
  }
}

TEST_CASE("tail bound flags") {
  const auto s = compute_radii(Weight::constant(), 14);
  const auto km = monomial_norms(s, 50);
  CHECK_FALSE(km.kernel(0.1, 0.1).tail_flag);
  CHECK(km.kernel(s.radius(12), s.radius(12)).tail_flag);
  CHECK(km.tail_bound(0.5) < km.tail_bound(0.9));
  const auto big = monomial_norms(s, default_degree(s));
  CHECK_FALSE(big.kernel(s.radius(12), s.radius(12)).tail_flag);
}

TEST_CASE("diagonal ratio") {
  const auto s = compute_radii(Weight::constant(), 14);
  const auto km = monomial_norms(s, default_degree(s));
  CHECK(diag_ratio(km, 0.0) == doctest::Approx(1.0 / km.coeff(0)));
  const auto grid = radial_grid(s, 64, 32, 10);
  const auto st = diag_ratio_stats(km, grid);
  CHECK(st.spread() <= 20.0);
  CHECK_FALSE(st.tail_flag);

  // Past r_3 the loglog kernel series needs far more than 1e4 terms.
  const auto ls = compute_radii(Weight::loglog(), 6);
  const auto lk = monomial_norms(ls, 20000);
  const auto lst = diag_ratio_stats(lk, radial_grid(ls, 24, 16, 3));
  CHECK(std::isfinite(lst.spread()));
  CHECK_FALSE(lst.tail_flag);
}

TEST_CASE("pointwise bound is the kernel diagonal") {
  const auto s = compute_radii(Weight::constant(), 12);
  const auto km = monomial_norms(s, 600);
  const Complex z{0.6, 0.3};
  PolySample extremal{kernel_coefficients(km, z), z};
  CHECK(pointwise_bound_check(km, std::span(&extremal, 1)) == doctest::Approx(diag_ratio(km, z)).epsilon(1e-9));

  PolySample unit{{1.0}, 0.0};
  CHECK(pointwise_bound_check(km, std::span(&unit, 1)) == doctest::Approx(1.0 / km.coeff(0)));

  CounterRng rng(3);
  for (int i = 0; i < 20; ++i) {
    PolySample ps{random_poly(50, rng), std::polar(0.99 * rng.uniform(), kTwoPi * rng.uniform())};
    CHECK(pointwise_bound_check(km, std::span(&ps, 1)) <= diag_ratio(km, ps.z) + 1e-9);
  }
}

TEST_CASE("area norm of constants") {
  // In polar form the moment of z^k is 2 int_0^1 x^{2k+1} w(x) dx: 1 and 1/2 for w = 1.
  const std::vector<Complex> one{1.0}, z{0.0, 1.0};
  CHECK(area_norm_poly(Weight::constant(), one) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(area_norm_poly(Weight::constant(), z) == doctest::Approx(0.5).epsilon(1e-6));
}

}
