#include <cmath>

#include "doctest.h"
#include "hopflax/semidiff.hpp"
#include "hopflax/util.hpp"

using namespace hopflax;

namespace {

ScalarFunction fn(const char* text, int dim = 1) {
  return ScalarFunction::from_expression(Expression::parse(text, dim));
}

double pt1;
std::span<const double> at(double y) {
  pt1 = y;
  return std::span<const double>(&pt1, 1);
}

}  // namespace

TEST_CASE("smooth point: both sets are the derivative singleton") {
  const ScalarFunction f = fn("x^2");
  const Semidifferentials s = semidiff_at(f, at(1.5));
  REQUIRE_FALSE(s.sup.is_empty());
  REQUIRE_FALSE(s.sub.is_empty());
  CHECK(s.sup.is_singleton(1e-9));
  const Interval iv = s.sup.interval_bounds();
  CHECK(iv.lo == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.sub.interval_bounds().lo == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("convex kink: empty above, interval below") {
  const Semidifferentials s = semidiff_at(fn("abs(x)"), at(0.0));
  CHECK(s.sup.is_empty());
  REQUIRE_FALSE(s.sub.is_empty());
  const Interval iv = s.sub.interval_bounds();
  CHECK(iv.lo == doctest::Approx(-1.0));
  CHECK(iv.hi == doctest::Approx(1.0));
}

TEST_CASE("concave kink: interval above, empty below") {
  const Semidifferentials s = semidiff_at(fn("-abs(x)"), at(0.0));
  CHECK(s.sub.is_empty());
  REQUIRE_FALSE(s.sup.is_empty());
  const Interval iv = s.sup.interval_bounds();
  CHECK(iv.lo == doctest::Approx(-1.0));
  CHECK(iv.hi == doctest::Approx(1.0));
}

TEST_CASE("set membership respects tolerance") {
  const Semidifferentials s = semidiff_at(fn("abs(x)"), at(0.0));
  double q = 0.3;
  CHECK(s.sub.contains(std::span<const double>(&q, 1), 1e-9));
  q = 1.0 + 1e-12;
  CHECK(s.sub.contains(std::span<const double>(&q, 1), 1e-9));
  q = 1.1;
  CHECK_FALSE(s.sub.contains(std::span<const double>(&q, 1), 1e-9));
}

TEST_CASE("derivative-bundle fallback at a saddle kink") {
  const ScalarFunction f = fn("abs(x) - abs(y)", 2);
  const double origin[2] = {0.0, 0.0};
  const DSharpSet ds = d_sharp(f, std::span<const double>(origin, 2));
  CHECK(ds.sup.is_empty());
  CHECK(ds.sub.is_empty());
  CHECK(ds.zero_fallback);
  const double zero[2] = {0.0, 0.0};
  CHECK(ds.contains(std::span<const double>(zero, 2), 1e-9));
  const double off[2] = {0.1, 0.0};
  CHECK_FALSE(ds.contains(std::span<const double>(off, 2), 1e-9));
}

TEST_CASE("coordinate-sum data lifts to boxes") {
  const ScalarFunction f = fn("-abs(x) - abs(y)", 2);
  const double origin[2] = {0.0, 0.0};
  const Semidifferentials s = semidiff_at(f, std::span<const double>(origin, 2));
  CHECK(s.sub.is_empty());
  REQUIRE(s.sup.kind() == SemidiffSet::Kind::Box);
  const auto verts = s.sup.vertices2();
  REQUIRE(verts.size() == 4);
  const double corner[2] = {1.0, -1.0};
  CHECK(s.sup.contains(std::span<const double>(corner, 2), 1e-9));
  const double outside[2] = {1.2, 0.0};
  CHECK_FALSE(s.sup.contains(std::span<const double>(outside, 2), 1e-9));
}

TEST_CASE("radial cone tip lifts to a disk") {
  const ScalarFunction f = fn("-sqrt(x*x + y*y)", 2);
  const double origin[2] = {0.0, 0.0};
  const Semidifferentials s = semidiff_at(f, std::span<const double>(origin, 2));
  REQUIRE(s.sup.kind() == SemidiffSet::Kind::Disk);
  CHECK(s.sup.disk_radius() == doctest::Approx(1.0));
  const double inside[2] = {0.6, 0.6};
  CHECK(s.sup.contains(std::span<const double>(inside, 2), 1e-9));
  const double outside[2] = {0.8, 0.8};
  CHECK_FALSE(s.sup.contains(std::span<const double>(outside, 2), 1e-9));
  CHECK_THROWS_AS(s.sup.vertices2(), InputError);
}

TEST_CASE("radial data away from the tip gives a gradient segment point") {
  const ScalarFunction f = fn("-sqrt(x*x + y*y)", 2);
  const double y[2] = {3.0, 4.0};
  const Semidifferentials s = semidiff_at(f, std::span<const double>(y, 2));
  REQUIRE_FALSE(s.sup.is_empty());
  CHECK(s.sup.is_singleton(1e-9));
  const double grad[2] = {-0.6, -0.8};
  CHECK(s.sup.contains(std::span<const double>(grad, 2), 1e-9));
}

TEST_CASE("minimum point admits zero in the subdifferential") {
  const Semidifferentials s = semidiff_at(fn("abs(x) + x^2"), at(0.0));
  double zero = 0.0;
  REQUIRE_FALSE(s.sub.is_empty());
  CHECK(s.sub.contains(std::span<const double>(&zero, 1), 1e-12));
}

TEST_CASE("sampled semidifferential converges on closed forms") {
  const NumericSemidiff n =
      numeric_semidiff([](double y) { return std::abs(y); }, 0.0);
  CHECK(n.left_converged);
  CHECK(n.right_converged);
  CHECK(n.deriv_minus == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(n.deriv_plus == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(n.sets.sup.is_empty());
  CHECK_FALSE(n.sets.sub.is_empty());

  const NumericSemidiff sm =
      numeric_semidiff([](double y) { return std::sin(y); }, 0.4);
  CHECK(sm.deriv_plus == doctest::Approx(std::cos(0.4)).epsilon(1e-5));
  CHECK(sm.sets.sup.is_singleton(1e-3));
}

TEST_CASE("piecewise carrier reports exact kink semidifferentials") {
  // x^2 left of 0, x right: slopes 0 then 1 at the joint -> convex kink
  const ScalarFunction f = ScalarFunction::piecewise(
      Expression::parse("piecewise(x^2 | 0 | x)", 1), {0.0});
  const Semidifferentials s = semidiff_at(f, at(0.0));
  CHECK(s.sup.is_empty());
  const Interval iv = s.sub.interval_bounds();
  CHECK(iv.lo == doctest::Approx(0.0));
  CHECK(iv.hi == doctest::Approx(1.0));
}
