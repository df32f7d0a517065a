#include <cmath>
#include <vector>

#include <doctest.h>

#include "bergman/error.hpp"
#include "bergman/weights.hpp"

using namespace bergman;

TEST_SUITE("weights") {

TEST_CASE("builtin densities and tails") {
  const auto c = Weight::constant();
  CHECK(c(0.3) == doctest::Approx(1.0));
  CHECK(c.tail(0.3) == doctest::Approx(0.7));

  const auto ll = Weight::loglog();
  CHECK(ll.tail(0.0) == doctest::Approx(1.0));
  for (double x : {0.1, 0.5, 0.9, 0.999}) CHECK(ll.tail(x) == doctest::Approx(1.0 / std::log(std::exp(1.0) / (1 - x))));

  const auto a = Weight::standard_alpha(0.5);
  for (double x : {0.0, 0.4, 0.99}) {
    CHECK(a(x) == doctest::Approx(0.5 / std::sqrt(1 - x)));
    CHECK(a.tail(x) == doctest::Approx(std::sqrt(1 - x)));
  }
}

TEST_CASE("density is minus the derivative of the tail") {
  // Central differences against the analytic density, away from the rim.
  for (const auto& w : {Weight::constant(), Weight::loglog(), Weight::standard_alpha(0.3),
                        alpha_transform(Weight::loglog(), 0.4)}) {
    for (double x : {0.2, 0.6, 0.9}) {
      const double h = 1e-6;
      const double fd = (w.tail(x - h) - w.tail(x + h)) / (2 * h);
      CHECK(w(x) == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK(w.tail(0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("tiny gaps stay accurate") {
  const auto ll = Weight::loglog();
  const double t = 1e-200;
  CHECK(ll.tail_from_gap(t) == doctest::Approx(1.0 / (1.0 - std::log(t))));
  CHECK(Weight::standard_alpha(0.5).tail_from_gap(1e-300) == doctest::Approx(1e-150));
}

TEST_CASE("alpha transform") {
  const auto c = Weight::constant();
  const auto same = alpha_transform(c, 0.0);
  CHECK(same.tail(0.37) == doctest::Approx(c.tail(0.37)));
  CHECK(alpha_transform(c, 0.5).tail(0.75) == doctest::Approx(0.5));

  const double x = 1 - std::exp(-3.0);
  CHECK(alpha_transform(Weight::loglog(), 0.5).tail(x) == doctest::Approx(0.5));

  // Chaining multiplies the exponents on the base tail.
  const auto chained = alpha_transform(alpha_transform(c, 0.5), 0.5);
  CHECK(chained.tail(0.9) == doctest::Approx(std::pow(0.1, 0.25)));
  CHECK_THROWS_AS((void)alpha_transform(c, 1.0), ValidationError);
}

TEST_CASE("doubling constants") {
  CHECK(check_doubling(Weight::constant(), 64).c_min == doctest::Approx(1.0));
  // w(1-t)/w(1-2t) = (2t/t)^{1/2}
  CHECK(check_doubling(Weight::standard_alpha(0.5), 64).c_min == doctest::Approx(std::sqrt(2.0)));

  // For loglog the ratio is 2 (log(e/2t)/log(e/t))^2, smallest at t = 1/2.
  const auto r = check_doubling(Weight::loglog(), 64);
  const double oracle = 2.0 / std::pow(1.0 + std::log(2.0), 2);
  CHECK(r.c_min == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(r.worst_t == doctest::Approx(0.5));
  CHECK(r.c_min > 0.4);
  CHECK(r.c_min < 1.1);
  CHECK(r.passes());
}

TEST_CASE("closed form radii") {
  const auto c = compute_radii(Weight::constant(), 10);
  REQUIRE(c.size() == 10);
  for (std::size_t n = 0; n <= 10; ++n) CHECK(c.radius(n) == doctest::Approx(1 - std::ldexp(1.0, -int(n))));

  const auto a = compute_radii(Weight::standard_alpha(0.5), 6);
  for (std::size_t n = 0; n <= 6; ++n) CHECK(a.gap(n) == doctest::Approx(std::ldexp(1.0, -2 * int(n))));

  const auto ll = compute_radii(Weight::loglog(), 5);
  for (std::size_t n = 0; n <= 5; ++n)
    CHECK(ll.gap(n) == doctest::Approx(std::exp(1.0 - std::ldexp(1.0, int(n)))).epsilon(1e-12));
}

TEST_CASE("radii separation") {
  CHECK(radii_separation(compute_radii(Weight::constant(), 10)) == doctest::Approx(2.0));
  CHECK(radii_separation(compute_radii(Weight::standard_alpha(0.5), 6)) == doctest::Approx(4.0));
  CHECK(radii_separation(compute_radii(Weight::loglog(), 5)) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("annulus index") {
  const auto c = compute_radii(Weight::constant(), 10);
  CHECK(c.annulus_index(0.0).n == 0);
  CHECK(c.annulus_index(0.6).n == 1);
  CHECK(c.annulus_index(0.5).n == 1);
  CHECK(c.annulus_index(0.4999).n == 0);
  CHECK(c.annulus_index(1 - 1e-6).overflow);

  const auto ll = compute_radii(Weight::loglog(), 5);
  CHECK(ll.annulus_index(1 - std::exp(-2.0)).n == 1);
}

TEST_CASE("tabulated weight reproduces a closed form") {
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i <= 2000; ++i) {
    const double x = 0.9995 * i / 2000.0;
    samples.emplace_back(x, 1.0);
  }
  const auto t = Weight::tabulated(samples);
  CHECK(t.tail(0.5) == doctest::Approx(0.5).epsilon(1e-9));
  const auto s = compute_radii(t, 8);
  for (std::size_t n = 0; n <= 8; ++n) CHECK(s.gap(n) == doctest::Approx(std::ldexp(1.0, -int(n))).epsilon(1e-8));
}

TEST_CASE("tabulated validation") {
  using S = std::vector<std::pair<double, double>>;
  CHECK_THROWS_AS((void)Weight::tabulated(S{{0.0, 1.0}}), ValidationError);
  CHECK_THROWS_AS((void)Weight::tabulated(S{{0.1, 1.0}, {0.9999, 1.0}}), ValidationError);
  CHECK_THROWS_AS((void)Weight::tabulated(S{{0.0, 1.0}, {0.5, 1.0}, {0.4, 1.0}, {0.9999, 1.0}}), ValidationError);
  CHECK_THROWS_AS((void)Weight::tabulated(S{{0.0, 1.0}, {0.9999, -1.0}}), ValidationError);
  CHECK_THROWS_AS((void)Weight::tabulated(S{{0.0, 1.0}, {0.5, 1.0}}), ValidationError);
}

TEST_CASE("weight spec parsing") {
  CHECK(make_weight("constant").kind() == WeightKind::constant);
  CHECK(make_weight("loglog").kind() == WeightKind::loglog);
  CHECK(make_weight("alpha:0.5").tail(0.75) == doctest::Approx(0.5));
  CHECK_THROWS_AS((void)make_weight("alpha:x"), ValidationError);
  CHECK_THROWS_AS((void)make_weight("gaussian"), ValidationError);
}

TEST_CASE("default truncation") {
  CHECK(default_truncation(Weight::constant()) == 14);
  const auto n = default_truncation(Weight::loglog());
  CHECK(n <= 9);
  CHECK(compute_radii(Weight::loglog(), n).gap(n) > 1e-300);
}

}
