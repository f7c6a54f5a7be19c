#include <cmath>

#include "doctest.h"
#include "hopflax/util.hpp"
#include "hopflax/viscosity.hpp"

using namespace hopflax;

namespace {

Problem make1(const char* ham, const char* sigma, double horizon, double w = 4.0) {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse(ham, 1);
  cfg.data = ScalarFunction::from_expression(Expression::parse(sigma, 1));
  cfg.horizon = horizon;
  cfg.window_lo[0] = -w;
  cfg.window_hi[0] = w;
  cfg.name = "t";
  return Problem::make(std::move(cfg));
}

}  // namespace

TEST_CASE("smooth points satisfy the equation with zero residual") {
  const Problem prob = make1("0.5*p^2", "-abs(x)", 1.0);
  const double x = 1.5;
  const PointVerdict v = check_viscosity_at(prob, 0.5, std::span<const double>(&x, 1));
  CHECK(v.differentiable);
  CHECK(v.sub_ok);
  CHECK(v.super_ok);
  CHECK(std::abs(v.sub_margin) <= 1e-10);
  CHECK(std::abs(v.super_margin) <= 1e-10);
  CHECK(v.residual <= 1e-10);
  CHECK(residual_at(prob, 0.5, std::span<const double>(&x, 1)) <= 1e-10);
}

TEST_CASE("shock line: subsolution sharp, supersolution vacuous") {
  const Problem prob = make1("0.5*p^2", "-abs(x)", 1.0);
  const double x = 0.0;
  const PointVerdict v = check_viscosity_at(prob, 1.0, std::span<const double>(&x, 1));
  CHECK_FALSE(v.differentiable);
  CHECK(v.sub_ok);
  CHECK(v.sub_margin <= 1e-9);
  CHECK(v.sub_margin >= -1e-9);  // the chord tops out exactly on the equation
  CHECK(v.super_ok);
  CHECK(std::isnan(v.super_margin));
  CHECK_THROWS_AS(residual_at(prob, 1.0, std::span<const double>(&x, 1)),
                  NondifferentiableError);
}

TEST_CASE("region verdict passes the solution it generated") {
  const Problem prob = make1("0.5*p^2", "-abs(x)", 1.0);
  const RegionVerdict v = verify_region(prob, 0.0, 1.0, -2.0, 2.0, 5, 33);
  CHECK(v.subsolution);
  CHECK(v.supersolution);
  CHECK(v.pass);
  CHECK(v.residual_max <= 1e-8);
  CHECK(v.kink_nodes >= 4);  // the scan crosses the shock at several times
  CHECK(v.failures.empty());
  REQUIRE_FALSE(v.initial_trace.empty());
  for (const TraceSample& s : v.initial_trace) CHECK(s.ok);
}

TEST_CASE("false candidate fails the supersolution side at the kink") {
  const Problem prob = make1("0.5*p^2", "-abs(x)", 1.0);
  const ScalarFunction v =
      ScalarFunction::from_expression(parse_candidate("abs(x) - 0.5*t"));
  const RegionVerdict rv = verify_candidate(prob, v, 0.0, 1.0, -2.0, 2.0, 5, 33);
  CHECK(rv.subsolution);       // chords of a convex kink stay under the equation
  CHECK_FALSE(rv.supersolution);
  CHECK_FALSE(rv.pass);
  CHECK(rv.worst_super == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(rv.worst_super_point.x[0] == doctest::Approx(0.0));
}

TEST_CASE("the true solution as an expression candidate passes") {
  const Problem prob = make1("0.5*p^2", "-abs(x)", 1.0);
  const ScalarFunction v =
      ScalarFunction::from_expression(parse_candidate("-abs(x) - 0.5*t"));
  const RegionVerdict rv = verify_candidate(prob, v, 0.0, 1.0, -2.0, 2.0, 5, 33);
  CHECK(rv.subsolution);
  CHECK(rv.supersolution);
  CHECK(rv.pass);
}

TEST_CASE("candidate variables premap without breaking error offsets") {
  const Expression e = parse_candidate("x + t");
  CHECK(e.dimension() == 2);
  CHECK(e(2.0, 5.0) == doctest::Approx(7.0));  // (t, x) order
  CHECK_THROWS_AS(parse_candidate("t + unknown(x)"), ParseError);
  try {
    parse_candidate("t + unknown(x)");
  } catch (const ParseError& err) {
    CHECK(err.offset() == 4);
  }
}

TEST_CASE("gridded candidate: interior boxes, kinks flagged, verdict sound") {
  const Problem prob = make1("0.5*p^2", "-abs(x)", 1.0);
  // sample the true solution on a fine rectangle
  const int nt = 41, nx = 161;
  const double t0 = 0.05, t1 = 1.0, x0 = -2.0, x1 = 2.0;
  std::vector<double> values(static_cast<std::size_t>(nt) * nx);
  const double dt = (t1 - t0) / (nt - 1), dx = (x1 - x0) / (nx - 1);
  for (int ix = 0; ix < nx; ++ix)
    for (int it = 0; it < nt; ++it)
      values[static_cast<std::size_t>(ix) * nt + it] =
          -std::abs(x0 + ix * dx) - 0.5 * (t0 + it * dt);
  const ScalarFunction v =
      ScalarFunction::grid2(t0, x0, dt, dx, nt, nx, std::move(values));
  const RegionVerdict rv =
      verify_candidate(prob, v, 0.1, 0.95, -1.5, 1.5, 4, 31, 1e-6);
  CHECK(rv.subsolution);
  CHECK(rv.supersolution);
  CHECK(rv.kink_nodes >= 1);  // x = 0 sits on the scan
}
