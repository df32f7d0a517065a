#include <cmath>
#include <vector>

#include <doctest.h>

#include "bergman/certify.hpp"
#include "bergman/rng.hpp"

using namespace bergman;

namespace {

PointSequence lattice(const RadiiSchedule& s, double spacing, std::size_t last) {
  return generate_circle_lattice(s, spacing, 1, {.max_points = 1'000'000, .max_circle = last, .min_circle = 1});
}

ComplexMatrix brute_frame(std::span<const Complex> pts, const KernelModel& km, std::size_t D) {
  ComplexMatrix M = ComplexMatrix::Zero(D + 1, D + 1);
  for (auto z : pts) {
    const double kd = km.diag(z);
    for (std::size_t a = 0; a <= D; ++a)
      for (std::size_t b = 0; b <= D; ++b)
        M(a, b) += std::pow(z, double(a)) * std::conj(std::pow(z, double(b))) / std::sqrt(km.coeff(a) * km.coeff(b)) / kd;
  }
  return M;
}

}  // namespace

TEST_SUITE("certify") {

TEST_CASE("normalized gram") {
  const auto s = compute_radii(Weight::constant(), 14);
  const auto km = monomial_norms(s, default_degree(s));
  const auto one = normalized_gram(PointSequence({0.3}), km);
  CHECK(one.matrix.rows() == 1);
  CHECK(one.matrix(0, 0).real() == doctest::Approx(1.0));

  double prev = 1.0;
  for (std::size_t n : {2u, 5u, 9u, 12u}) {
    const double r = s.radius(n);
    const auto g = normalized_gram(PointSequence({r, -r}), km);
    double series = 0.0, diag = 0.0;
    for (std::size_t k = 0; k <= km.degree(); ++k) {
      series += std::pow(-r * r, double(k)) / km.coeff(k);
      diag += std::pow(r * r, double(k)) / km.coeff(k);
    }
    CHECK(g.matrix(0, 1).real() == doctest::Approx(series / diag).epsilon(1e-9));
    CHECK(std::abs(g.matrix(0, 1)) < prev);
    prev = std::abs(g.matrix(0, 1));
  }
  CHECK(prev < 1e-2);

  const auto lat = lattice(s, 8.0, 7);
  const auto g = normalized_gram(lat, km);
  for (Eigen::Index i = 0; i < g.matrix.rows(); ++i) CHECK(g.matrix(i, i).real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((g.matrix - g.matrix.adjoint()).norm() < 1e-12);
  CHECK(hermitian_extremes(g.matrix).min >= -1e-10);
}

TEST_CASE("interpolation certificate") {
  const auto s = compute_radii(Weight::constant(), 14);
  const auto km = monomial_norms(s, 600);
  const auto one = interpolation_certificate(PointSequence({0.5}), km);
  CHECK(one.min_eig == doctest::Approx(1.0));
  CHECK(one.verdict);
  const Complex a = 0.5;
  const Complex b = mobius(a, 1e-4);  // rho(a, b) = 1e-4
  const auto pair = interpolation_certificate(PointSequence({a, b}), km);
  CHECK(pair.min_eig < 1e-3);
  CHECK_FALSE(pair.verdict);
}

TEST_CASE("frame matrix matches direct assembly") {
  const auto s = compute_radii(Weight::constant(), 12);
  const auto km = monomial_norms(s, 200);
  const auto base = lattice(s, 6.0, 6);
  std::vector<Complex> pts(base.points().begin(), base.points().end());
  pts.push_back({0.31, -0.2});
  pts.push_back({-0.8, 0.11});
  const PointSequence lambda(pts);
  const std::size_t D = 60;
  const auto M = frame_matrix(lambda, km, D);
  const auto ref = brute_frame(pts, km, D);
  CHECK((M - ref).norm() <= 1e-11 * ref.norm());
}

TEST_CASE("frame bounds monotonicity") {
  const auto s = compute_radii(Weight::constant(), 12);
  const auto km = monomial_norms(s, 400);
  const auto empty = frame_bounds(PointSequence(), km, 50);
  CHECK(empty.A == 0.0);
  CHECK(empty.B == 0.0);

  const auto lat = lattice(s, 5.0, 8);
  double prev_a = 1e300, prev_b = 0.0;
  for (std::size_t D : {16u, 32u, 64u, 128u}) {
    const auto f = frame_bounds(lat, km, D);
    CHECK(f.A <= f.B);
    CHECK(f.A <= prev_a * (1 + 1e-10));
    CHECK(f.B >= prev_b * (1 - 1e-10));
    prev_a = f.A;
    prev_b = f.B;
  }
  const auto more = lat.merged(PointSequence({Complex{0.1, 0.2}}));
  const auto f0 = frame_bounds(lat, km, 64), f1 = frame_bounds(more, km, 64);
  CHECK(f1.A >= f0.A - 1e-10);
  CHECK(f1.B >= f0.B - 1e-10);
}

TEST_CASE("frame ladder separates dense from sparse") {
  const auto s = compute_radii(Weight::constant(), 14);
  const auto km = monomial_norms(s, 512);
  const auto dense = frame_ladder(lattice(s, 2.0, 12), km, 64, 512);
  CHECK(dense.plateau);
  CHECK(dense.steps.back().A > 0.0);
  const auto sparse = frame_ladder(lattice(s, 40.0, 12), km, 64, 512);
  CHECK_FALSE(sparse.plateau);
  CHECK(sparse.steps.back().A < sparse.steps.front().A);
}

TEST_CASE("explicit interpolation operator") {
  const auto s = compute_radii(Weight::constant(), 10);
  const auto lat = lattice(s, 64.0, 8);
  BuildOptions opt;
  opt.density.include_self = false;
  const auto g = build_G(lat, s, opt);
  const std::size_t n = lat.size();
  for (std::size_t l : {std::size_t{0}, std::size_t{3}, n - 1}) {
    std::vector<Complex> a(n, 0.0);
    a[l] = {0.0, 2.0};
    for (std::size_t j = 0; j < n; ++j) {
      const Complex f = interpolate_explicit(g, a, lat[j]);
      CHECK(std::abs(f - a[j]) <= 1e-6 * 2.0);
    }
  }
  const std::vector<Complex> zero(n, 0.0);
  CHECK(interpolate_explicit(g, zero, Complex{0.2, 0.3}) == Complex{0.0});
  CHECK(interpolate_explicit(g, zero, Complex{-0.7, 0.1}) == Complex{0.0});
}

TEST_CASE("certification report") {
  const auto s = compute_radii(Weight::constant(), 10);
  const auto km = monomial_norms(s, default_degree(s));
  const auto lat = lattice(s, 64.0, 8);
  BuildOptions opt;
  opt.density.include_self = false;
  const auto g = build_G(lat, s, opt);
  CounterRng rng(1);
  std::vector<Complex> a(lat.size());
  for (auto& v : a) v = {rng.normal(), rng.normal()};
  const auto rep = certify(lat, km, 256, g, a);
  CHECK(rep.gram_min_eig > 0.0);
  CHECK(rep.gram_min_eig <= 1.0);
  CHECK(rep.gram_max_eig >= 1.0);
  CHECK(rep.frame_A <= rep.frame_B);
  REQUIRE(rep.residuals.size() == lat.size());
  for (double r : rep.residuals) CHECK(r <= 1e-6);
  CHECK(rep.data_norm == doctest::Approx(std::sqrt(data_norm(lat, km, a))));
  CHECK(rep.solution_norm > 0.0);
  CHECK(std::isfinite(rep.solution_norm));
}

TEST_CASE("sampling reconstruction is linear") {
  const auto s = compute_radii(Weight::constant(), 10);
  const auto lat = lattice(s, 4.0, 10);
  BuildOptions opt;
  opt.kind = GCase::sampling;
  opt.m = 3;
  opt.density.include_self = false;
  opt.density.grid_angular = 64;
  const auto g = build_G(lat, s, opt);
  CounterRng rng(8);
  const std::size_t n = lat.size();
  std::vector<Complex> s1(n), s2(n), mix(n), zero(n, 0.0);
  const Complex al{0.3, -1.2}, be{2.0, 0.5};
  for (std::size_t j = 0; j < n; ++j) {
    s1[j] = {rng.normal(), rng.normal()};
    s2[j] = {rng.normal(), rng.normal()};
    mix[j] = al * s1[j] + be * s2[j];
  }
  for (Complex z : {Complex{0.1, 0.1}, std::polar(0.6, 2.0)}) {
    const Complex lhs = sampling_reconstruct(g, mix, z);
    const Complex rhs = al * sampling_reconstruct(g, s1, z) + be * sampling_reconstruct(g, s2, z);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    CHECK(sampling_reconstruct(g, zero, z) == Complex{0.0});
  }
}

TEST_CASE("necessity test functions") {
  const auto s = compute_radii(Weight::constant(), 10);
  const Complex l = std::polar(0.7, 0.4);
  const auto f0 = necessity_test_function(PointSequence({l}), s, 0, 3);
  CHECK(f0.zeros().empty());
  const Complex z{0.2, -0.5};
  CHECK(std::abs(f0(z) - 1.0 / (1.0 - std::conj(l) * z)) < 1e-14);

  const auto lat = lattice(s, 6.0, 8);
  const std::size_t idx = 20;
  const auto f = necessity_test_function(lat, s, idx, 2);
  CHECK_FALSE(f.zeros().empty());
  const double cut = s.radius(s.annulus_index(lat[idx]).n + 2);
  for (std::size_t j = 0; j < lat.size(); ++j) {
    if (j == idx || std::abs(lat[j]) > cut) continue;
    CHECK(std::abs(f(lat[j])) < 1e-12);
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < lat.size(); j += 53) worst = std::max(worst, necessity_check(lat, s, j, 2).ratio());
  CHECK(worst > 0.0);
  CHECK(worst <= 50.0);
}

}
