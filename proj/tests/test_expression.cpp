#include <cmath>

#include "doctest.h"
#include "hopflax/expression.hpp"
#include "hopflax/util.hpp"

using namespace hopflax;

TEST_CASE("arithmetic and precedence") {
  const Expression e = Expression::parse("1 + 2*x^2 - x/4", 1);
  CHECK(e(2.0) == doctest::Approx(1 + 8 - 0.5).epsilon(1e-15));
  CHECK(e(-1.0) == doctest::Approx(1 + 2 + 0.25).epsilon(1e-15));
}

TEST_CASE("power binds tighter than unary minus") {
  const Expression e = Expression::parse("-x^2", 1);
  CHECK(e(3.0) == doctest::Approx(-9.0));
}

TEST_CASE("functions evaluate") {
  const Expression e = Expression::parse("abs(x) + sin(x) + cos(x) + sqrt(x+2)", 1);
  const double x = 0.7;
  CHECK(e(x) == doctest::Approx(std::abs(x) + std::sin(x) + std::cos(x) +
                                std::sqrt(x + 2))
                    .epsilon(1e-15));
}

TEST_CASE("min and max are n-ary") {
  const Expression e = Expression::parse("min(x, 2*x, 1) + max(x, -x)", 1);
  CHECK(e(0.5) == doctest::Approx(0.5 + 0.5));
  CHECK(e(-3.0) == doctest::Approx(-6.0 + 3.0));
}

TEST_CASE("piecewise with breakpoints") {
  const Expression e = Expression::parse("piecewise(-x | 0 | x^2)", 1);
  CHECK(e(-2.0) == doctest::Approx(2.0));
  CHECK(e(3.0) == doctest::Approx(9.0));
  CHECK_THROWS_AS(Expression::parse("piecewise(x | 1 | x | 0 | x)", 1), ParseError);
}

TEST_CASE("two variables, p/q aliases") {
  const Expression e = Expression::parse("0.5*(p^2 + q^2)", 2);
  CHECK(e(1.0, 2.0) == doctest::Approx(2.5));
  CHECK_THROWS_AS(Expression::parse("q", 1), ParseError);
}

TEST_CASE("one-sided derivatives at a kink") {
  const Expression e = Expression::parse("abs(x)", 1);
  CHECK(e.deriv1(0.0, +1) == doctest::Approx(1.0));
  CHECK(e.deriv1(0.0, -1) == doctest::Approx(-1.0));
  CHECK(e.deriv1(2.0, +1) == doctest::Approx(1.0));
  const Expression m = Expression::parse("max(x, -2*x)", 1);
  CHECK(m.deriv1(0.0, +1) == doctest::Approx(1.0));
  CHECK(m.deriv1(0.0, -1) == doctest::Approx(-2.0));
}

TEST_CASE("derivative of smooth pieces is exact") {
  const Expression e = Expression::parse("x^3 - 2*x", 1);
  CHECK(e.deriv1(1.5, +1) == doctest::Approx(3 * 1.5 * 1.5 - 2).epsilon(1e-14));
  const Expression s = Expression::parse("sin(2*x)", 1);
  CHECK(s.deriv1(0.3, -1) == doctest::Approx(2 * std::cos(0.6)).epsilon(1e-14));
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    Expression::parse("1 + unknown(x)", 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(Expression::parse("(x", 1), ParseError);
  CHECK_THROWS_AS(Expression::parse("", 1), ParseError);
  CHECK_THROWS_AS(Expression::parse("x^p", 1), ParseError);  // exponent not constant
}

TEST_CASE("print/parse roundtrip is stable") {
  for (const char* text :
       {"0.5*p^2", "abs(x) - 2", "piecewise(-x | 0 | x^2)", "min(x, 1 - x, x^2)",
        "sqrt(x*x + 1)", "-x^3/7 + sin(x)*cos(x)"}) {
    const Expression e = Expression::parse(text, 1);
    const std::string printed = e.str();
    const Expression back = Expression::parse(printed, 1);
    CHECK(back.str() == printed);
    for (double x : {-1.7, -0.3, 0.0, 0.9, 2.4})
      CHECK(back(x) == doctest::Approx(e(x)).epsilon(1e-15));
  }
}

TEST_CASE("constant folding detection") {
  double v = 0;
  CHECK(Expression::parse("3*4 - 2", 1).constant_value(&v));
  CHECK(v == doctest::Approx(10.0));
  CHECK_FALSE(Expression::parse("x + 1", 1).constant_value(&v));
}

TEST_CASE("kink candidates locate nonsmooth points") {
  const Expression e = Expression::parse("abs(x - 1) + max(x, -x)", 1);
  const auto ks = e.kink_candidates(-3.0, 3.0);
  REQUIRE(ks.size() >= 2);
  bool near0 = false, near1 = false;
  for (double k : ks) {
    if (std::abs(k) < 1e-9) near0 = true;
    if (std::abs(k - 1) < 1e-9) near1 = true;
  }
  CHECK(near0);
  CHECK(near1);
}

TEST_CASE("separable detection splits coordinate sums") {
  std::vector<Expression> parts;
  const Expression e = Expression::parse("0.5*p^2 + 0.25*q^4 + 1", 2);
  REQUIRE(e.separable_parts(&parts));
  REQUIRE(parts.size() == 2);
  CHECK(parts[0](2.0) + parts[1](3.0) == doctest::Approx(e(2.0, 3.0)));
  const Expression ns = Expression::parse("p*q", 2);
  CHECK_FALSE(ns.separable_parts(&parts));
}

TEST_CASE("radial detection recovers the profile") {
  Expression prof;
  const Expression e = Expression::parse("sqrt(x*x + y*y)", 2);
  REQUIRE(e.radial_profile(&prof));
  CHECK(prof(2.0) == doctest::Approx(e(2.0, 0.0)));
  CHECK(prof(5.0) == doctest::Approx(e(3.0, 4.0)));
  const Expression not_radial = Expression::parse("x + y", 2);
  CHECK_FALSE(not_radial.radial_profile(&prof));
}

TEST_CASE("negate and sum rebuild") {
  const Expression a = Expression::parse("x^2", 1);
  const Expression b = Expression::parse("abs(x)", 1);
  CHECK(Expression::negate(a)(3.0) == doctest::Approx(-9.0));
  CHECK(Expression::sum(a, b)(-2.0) == doctest::Approx(6.0));
}
