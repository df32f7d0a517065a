#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "bergman/error.hpp"
#include "bergman/geometry.hpp"
#include "bergman/rng.hpp"

using namespace bergman;

namespace {

double brute_separation(std::span<const Complex> p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) best = std::min(best, std::abs(p[i] - p[j]) / std::abs(1.0 - std::conj(p[j]) * p[i]));
  return best;
}

std::vector<Complex> random_points(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<Complex> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(std::polar(std::sqrt(rng.uniform()) * 0.999, kTwoPi * rng.uniform()));
  return p;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("pseudohyperbolic distance") {
  const Complex z{0.3, -0.4};
  CHECK(rho(0.0, z) == doctest::Approx(0.5));
  CHECK(rho(z, z) == 0.0);
  CHECK(rho(0.5, -0.5) == doctest::Approx(0.8));
  CHECK(rho(z, Complex{0.1, 0.7}) == doctest::Approx(rho(Complex{0.1, 0.7}, z)));
  // Mobius invariance: rho(phi_a(z), phi_a(w)) = rho(z, w)
  const Complex a{0.6, 0.2}, w{-0.2, 0.5};
  CHECK(rho(mobius(a, z), mobius(a, w)) == doctest::Approx(rho(z, w)));
  CHECK(std::abs(mobius(a, a)) < 1e-15);
}

TEST_CASE("blaschke log") {
  CHECK(blaschke_log(PointSequence({0.0}), 0.5) == doctest::Approx(std::log(0.5)));
  CHECK(std::isinf(blaschke_log(PointSequence({0.5}), 0.5)));
  CHECK(blaschke_log(PointSequence({0.3, -0.3}), 0.0) == doctest::Approx(std::log(0.09)));
  CHECK(blaschke_log(PointSequence(), 0.2) == 0.0);
}

TEST_CASE("jensen identity") {
  CHECK(jensen_check(PointSequence(), 0.9, 256).residual == 0.0);
  const auto one = jensen_check(PointSequence({0.0}), 0.9, 256);
  CHECK(one.quadrature_mean == doctest::Approx(std::log(0.9)));
  const auto two = jensen_check(PointSequence({Complex{0.2, 0.1}, -0.4}), 0.95, 4096);
  CHECK(two.residual <= 1e-8);
  CHECK_FALSE(two.divergence_flag);
}

TEST_CASE("carleson square membership") {
  CHECK(in_carleson_square(0.5, 0.7));
  CHECK_FALSE(in_carleson_square(0.5, 0.3));
  CHECK_FALSE(in_carleson_square(0.9, std::polar(0.95, 0.2)));
  CHECK(in_carleson_square(0.9, std::polar(0.95, 0.05)));
}

TEST_CASE("separation matches a brute force scan") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = random_points(400, seed);
    CHECK(compute_separation(p) == doctest::Approx(brute_separation(p)).epsilon(1e-14));
  }
  const auto s = compute_radii(Weight::constant(), 8);
  const auto lat = generate_circle_lattice(s, 1.0, 1);
  CHECK(lat.separation() == doctest::Approx(brute_separation(lat.points())).epsilon(1e-14));
  CHECK(lat.separation() >= 0.2);
  CHECK(std::isinf(PointSequence({0.4}).separation()));
}

TEST_CASE("lattice circle counts") {
  const auto s = compute_radii(Weight::constant(), 8);
  const auto sparse = generate_circle_lattice(s, 1e9, 1, {.max_points = 1'000'000, .max_circle = 8, .min_circle = 1});
  CHECK(sparse.size() == 8);
  for (std::size_t n = 1; n <= 8; ++n) {
    const double expected = kTwoPi * (1 - std::ldexp(1.0, -int(n))) * std::ldexp(1.0, int(n));
    CHECK(std::abs(double(lattice_circle_count(s, n, 1.0)) - expected) <= 1.0);
  }
  // Stride 2 keeps even circles only.
  const auto even = generate_circle_lattice(s, 4.0, 2, {.max_points = 1'000'000, .max_circle = 8, .min_circle = 1});
  for (auto z : even.points()) CHECK(s.annulus_index(z).n % 2 == 0);
}

TEST_CASE("sequence operations") {
  const PointSequence a({0.1, Complex{0.0, 0.5}});
  const auto r = a.rotated(kPi / 2);
  CHECK(std::abs(r[0] - Complex{0.0, 0.1}) < 1e-15);
  CHECK(a.merged(PointSequence({-0.3})).size() == 3);
  const std::vector<std::size_t> idx{1};
  CHECK(a.subset(idx)[0] == Complex{0.0, 0.5});
  CHECK_THROWS_AS(PointSequence({1.0}), ValidationError);
  CHECK_THROWS_AS(PointSequence({Complex{std::nan(""), 0.0}}), ValidationError);
}

}
