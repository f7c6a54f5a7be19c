#include <cmath>

#include "doctest.h"
#include "hopflax/hopflax.hpp"
#include "hopflax/util.hpp"

using namespace hopflax;

namespace {

Problem quad_neg_abs(double horizon = 1.0) {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("0.5*p^2", 1);
  cfg.data = ScalarFunction::from_expression(Expression::parse("-abs(x)", 1));
  cfg.horizon = horizon;
  cfg.window_lo[0] = -4;
  cfg.window_hi[0] = 4;
  cfg.lipschitz_hint = 1.0;
  cfg.name = "neg_abs";
  return Problem::make(std::move(cfg));
}

Problem quad_abs(double horizon = 2.0) {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("0.5*p^2", 1);
  cfg.data = ScalarFunction::from_expression(Expression::parse("abs(x)", 1));
  cfg.horizon = horizon;
  cfg.window_lo[0] = -4;
  cfg.window_hi[0] = 4;
  cfg.lipschitz_hint = 1.0;
  cfg.name = "abs";
  return Problem::make(std::move(cfg));
}

// closed form for sigma = |x|, H = p^2/2: parabolic cap inside |x| <= t
double abs_solution(double t, double x) {
  return std::abs(x) <= t ? x * x / (2 * t) : std::abs(x) - t / 2;
}

double at1(const Problem& p, double t, double x) { return evaluate1(p, t, x); }

}  // namespace

TEST_CASE("concave kink transports at constant depth") {
  const Problem prob = quad_neg_abs();
  for (double t : {0.1, 0.5, 1.0})
    for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0})
      CHECK(at1(prob, t, x) ==
            doctest::Approx(-std::abs(x) - t / 2).epsilon(1e-9));
}

TEST_CASE("convex kink smooths into the parabolic cap") {
  const Problem prob = quad_abs();
  for (double t : {0.2, 1.0, 2.0})
    for (double x : {-3.0, -1.0, -0.1, 0.0, 0.4, 2.5})
      CHECK(at1(prob, t, x) == doctest::Approx(abs_solution(t, x)).epsilon(1e-9));
}

TEST_CASE("minimizer bookkeeping on the symmetric query") {
  const Problem prob = quad_neg_abs();
  const double x = 0.0;
  const MinimizerSet ms = minimizer_set(prob, 1.0, std::span<const double>(&x, 1));
  CHECK(ms.value == doctest::Approx(-0.5).epsilon(1e-9));
  REQUIRE(ms.points.size() == 2);
  CHECK(ms.points[0].y[0] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(ms.points[1].y[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK_FALSE(ms.singleton());
}

TEST_CASE("off the axis the minimizer chases the kink") {
  const Problem prob = quad_neg_abs();
  const double x = 2.0;
  const MinimizerSet ms = minimizer_set(prob, 0.5, std::span<const double>(&x, 1));
  REQUIRE(ms.singleton());
  CHECK(ms.points[0].y[0] == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(ms.value == doctest::Approx(-2.25).epsilon(1e-10));
}

TEST_CASE("boundary regime returns the datum") {
  const Problem prob = quad_neg_abs();
  const double x = 1.3;
  const MinimizerSet ms = minimizer_set(prob, 1e-5, std::span<const double>(&x, 1));
  CHECK(ms.boundary_regime);
  CHECK(ms.value == doctest::Approx(-1.3));
  REQUIRE(ms.points.size() == 1);
  CHECK(ms.points[0].y[0] == doctest::Approx(1.3));
}

TEST_CASE("negative time is refused") {
  const Problem prob = quad_neg_abs();
  const double x = 0.0;
  CHECK_THROWS_AS(minimizer_set(prob, -0.5, std::span<const double>(&x, 1)),
                  InputError);
}

TEST_CASE("gradient at smooth points solves the equation exactly") {
  const Problem prob = quad_neg_abs();
  const double x = 2.0;
  const GradientPair g = gradient_at(prob, 0.5, std::span<const double>(&x, 1));
  CHECK(g.p[0] == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(g.p_t == doctest::Approx(-0.5).epsilon(1e-7));
  CHECK(g.p_t + 0.5 * g.p[0] * g.p[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gradient query at a corner throws") {
  const Problem prob = quad_neg_abs();
  const double x = 0.0;
  CHECK_THROWS_AS(gradient_at(prob, 1.0, std::span<const double>(&x, 1)),
                  NondifferentiableError);
}

TEST_CASE("solved grid matches pointwise evaluation and flags corners") {
  const Problem prob = quad_neg_abs();
  const auto ts = linspace(0.25, 1.0, 4);
  const auto xs = linspace(-2.0, 2.0, 9);  // x = 0 is a node
  const SolutionGrid grid = solve_grid(prob, ts, xs, {}, {});
  REQUIRE(grid.values.size() == 36);
  for (std::size_t it = 0; it < ts.size(); ++it)
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::size_t k = it * xs.size() + i;
      CHECK(grid.values[k] ==
            doctest::Approx(-std::abs(xs[i]) - ts[it] / 2).epsilon(1e-9));
      const bool corner = std::abs(xs[i]) < 1e-12;
      CHECK(grid.differentiable[k] == (corner ? 0 : 1));
      if (!corner) {
        CHECK(grid.p_x[k] == doctest::Approx(xs[i] > 0 ? -1.0 : 1.0).epsilon(1e-6));
        CHECK(grid.p_t[k] == doctest::Approx(-0.5).epsilon(1e-6));
      } else {
        CHECK(std::isnan(grid.p_x[k]));
      }
      CHECK(grid.status[k] == 0);
    }
}

TEST_CASE("parallel grids are bitwise identical") {
  const Problem prob = quad_abs();
  const auto ts = linspace(0.2, 2.0, 5);
  const auto xs = linspace(-3.0, 3.0, 33);
  EvalOptions opt1, opt8;
  opt1.jobs = 1;
  opt8.jobs = 8;
  const SolutionGrid a = solve_grid(prob, ts, xs, {}, opt1);
  const SolutionGrid b = solve_grid(prob, ts, xs, {}, opt8);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    CHECK(a.values[k] == b.values[k]);
    const bool an = std::isnan(a.p_x[k]), bn = std::isnan(b.p_x[k]);
    CHECK(an == bn);
    if (!an) CHECK(a.p_x[k] == b.p_x[k]);
  }
}

TEST_CASE("semigroup identity holds through an intermediate time") {
  const Problem prob = quad_neg_abs();
  const SemigroupReport rep = semigroup_check(prob, 0.5, 1.0, 0.0);
  CHECK(rep.direct == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(rep.residual <= 5e-4);
}

TEST_CASE("max-form value for a concave field and affine data") {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("-0.5*p^2", 1);
  cfg.data = ScalarFunction::from_expression(Expression::parse("x", 1));
  cfg.horizon = 1.0;
  cfg.window_lo[0] = -2;
  cfg.window_hi[0] = 2;
  cfg.concave = true;
  cfg.name = "concave_affine";
  const Problem prob = Problem::make(std::move(cfg));
  CHECK(evaluate_concave(prob, 1.0, 1.0) == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(evaluate_concave(prob, 0.5, -1.0) == doctest::Approx(-0.75).epsilon(1e-9));
  const double x = 1.0;
  CHECK_THROWS_AS(minimizer_set(prob, 1.0, std::span<const double>(&x, 1)),
                  InputError);
}

TEST_CASE("hypothesis screening rejects a concave field in min form") {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("-p^2", 1);
  cfg.data = ScalarFunction::from_expression(Expression::parse("-abs(x)", 1));
  cfg.horizon = 1.0;
  CHECK_THROWS_AS(Problem::make(std::move(cfg)), HypothesisError);
}

TEST_CASE("separable plane query reduces to per-axis values") {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("0.5*(p^2 + q^2)", 2);
  cfg.data = ScalarFunction::from_expression(Expression::parse("-abs(x) - abs(y)", 2));
  cfg.horizon = 1.0;
  for (int a = 0; a < 2; ++a) {
    cfg.window_lo[a] = -2;
    cfg.window_hi[a] = 2;
  }
  cfg.lipschitz_hint = 1.0;
  cfg.name = "pair";
  const Problem prob = Problem::make(std::move(cfg));
  const double x[2] = {0.0, 0.0};
  CHECK(evaluate(prob, 0.5, std::span<const double>(x, 2)) ==
        doctest::Approx(-0.5).epsilon(1e-8));
  const double x2[2] = {1.0, -0.5};
  CHECK(evaluate(prob, 0.25, std::span<const double>(x2, 2)) ==
        doctest::Approx(-1.0 - 0.5 - 0.25).epsilon(1e-8));
  const MinimizerSet ms = minimizer_set(prob, 1.0, std::span<const double>(x, 2));
  CHECK(ms.dim == 2);
  CHECK(ms.value == doctest::Approx(-1.0).epsilon(1e-8));
  REQUIRE(ms.points.size() == 4);  // the four corners (+-1, +-1)
  for (const Minimizer& m : ms.points) {
    CHECK(std::abs(m.y[0]) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(m.y[1]) == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("coupled plane query: affine data has a closed form") {
  Problem::Config cfg;
  cfg.hamiltonian = Expression::parse("0.5*(p^2 + q^2) + 0.25*p*q", 2);
  cfg.data = ScalarFunction::from_expression(Expression::parse("0.2*x + 0.3*y", 2));
  cfg.horizon = 1.0;
  for (int a = 0; a < 2; ++a) {
    cfg.window_lo[a] = -2;
    cfg.window_hi[a] = 2;
  }
  cfg.name = "coupled";
  const Problem prob = Problem::make(std::move(cfg));
  // affine data: u(t,x) = <c,x> - t H(c)
  const double hc = 0.5 * (0.04 + 0.09) + 0.25 * 0.06;
  for (const auto& q : {std::pair{0.5, std::pair{0.3, -0.8}},
                        std::pair{1.0, std::pair{0.0, 0.0}}}) {
    const double t = q.first;
    const double x[2] = {q.second.first, q.second.second};
    CHECK(evaluate(prob, t, std::span<const double>(x, 2)) ==
          doctest::Approx(0.2 * x[0] + 0.3 * x[1] - t * hc).epsilon(1e-6));
  }
}
