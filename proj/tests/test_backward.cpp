#include <cmath>

#include "doctest.h"
#include "hopflax/backward.hpp"
#include "hopflax/util.hpp"

using namespace hopflax;

namespace {

Problem terminal1(const char* g, double horizon = 1.0, double w = 2.0) {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("0.5*p^2", 1);
  cfg.data = ScalarFunction::from_expression(Expression::parse(g, 1));
  cfg.horizon = horizon;
  cfg.window_lo[0] = -w;
  cfg.window_hi[0] = w;
  cfg.lipschitz_hint = 1.0;
  cfg.terminal = true;
  cfg.name = "terminal";
  return Problem::make(std::move(cfg));
}

}  // namespace

TEST_CASE("backward transport of affine data is a drift") {
  const Problem prob = terminal1("x");
  // w(t,x) = x + (T-t)/2 for H = p^2/2
  for (double t : {0.0, 0.25, 0.75, 1.0})
    for (double x : {-1.0, 0.0, 0.8})
      CHECK(backward_value(prob, t, x) ==
            doctest::Approx(x + (1.0 - t) / 2).epsilon(1e-9));
  CHECK_THROWS_AS(backward_value(prob, 1.5, 0.0), InputError);
}

TEST_CASE("backward transport caps the concave kink with a parabola") {
  const Problem prob = terminal1("-abs(x)");
  // at t = 0: -x^2/2 inside |x| <= 1, -|x| + 1/2 outside
  for (double x : {-1.5, -0.7, 0.0, 0.4, 1.2}) {
    const double expect =
        std::abs(x) <= 1.0 ? -x * x / 2 : -std::abs(x) + 0.5;
    CHECK(backward_value(prob, 0.0, x) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("backward transport lifts the convex kink") {
  const Problem prob = terminal1("abs(x)");
  // w(0, y) = max(|y|, something) ... = |y| + 1/2 for H = p^2/2, T = 1
  for (double x : {-1.0, 0.0, 0.5})
    CHECK(backward_value(prob, 0.0, x) ==
          doctest::Approx(std::abs(x) + 0.5).epsilon(1e-9));
}

TEST_CASE("backward grid marks the terminal plane as boundary") {
  const Problem prob = terminal1("x");
  const auto ts = linspace(0.0, 1.0, 3);
  const auto xs = linspace(-1.0, 1.0, 5);
  const SolutionGrid grid = backward_grid(prob, ts, xs);
  REQUIRE(grid.values.size() == 15);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(grid.values[0 * 5 + i] == doctest::Approx(xs[i] + 0.5).epsilon(1e-9));
    CHECK(grid.values[2 * 5 + i] == doctest::Approx(xs[i]).epsilon(1e-12));
    CHECK(grid.status[2 * 5 + i] == 1);  // t = T: the datum itself
  }
}

TEST_CASE("round trip with affine data returns exactly") {
  const Problem prob = terminal1("x");
  const BfReport bf = bf_condition(prob, 2049);
  CHECK(bf.holds);
  CHECK(bf.max_deviation <= 1e-9);
  const RoundtripReport rt = roundtrip(prob, 2049);
  CHECK(rt.holds);
  CHECK(rt.sup_error <= 1e-9);
  CHECK(rt.equality_error <= 1e-6);
  CHECK(rt.within_theorem);
  CHECK(rt.strip_full);
}

TEST_CASE("round trip through the parabolic cap returns within grid error") {
  const Problem prob = terminal1("-abs(x)");
  const BfReport bf = bf_condition(prob, 2049);
  CHECK(bf.holds);
  CHECK(bf.max_deviation <= 1e-5);
  const RoundtripReport rt = roundtrip(prob, 2049);
  CHECK(rt.holds);
  CHECK(rt.sup_error <= 1e-5);
  CHECK_FALSE(rt.within_theorem);
}

TEST_CASE("convex kink breaks the round trip by a half") {
  const Problem prob = terminal1("abs(x)");
  const BfReport bf = bf_condition(prob, 2049);
  CHECK_FALSE(bf.holds);
  CHECK(bf.max_deviation == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(bf.worst_x == doctest::Approx(0.0).epsilon(1e-2));
  const RoundtripReport rt = roundtrip(prob, 2049);
  CHECK_FALSE(rt.holds);
  CHECK(rt.sup_error == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("backward calls need terminal problems") {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("0.5*p^2", 1);
  cfg.data = ScalarFunction::from_expression(Expression::parse("-abs(x)", 1));
  cfg.horizon = 1.0;
  cfg.name = "initial";
  const Problem prob = Problem::make(std::move(cfg));
  CHECK_THROWS_AS(backward_value(prob, 0.5, 0.0), InputError);
  CHECK_THROWS_AS(bf_condition(prob), InputError);
}
