#include <cmath>
#include <vector>

#include "doctest.h"
#include "hopflax/convex.hpp"
#include "hopflax/util.hpp"

using namespace hopflax;

namespace {

Expression ex(const char* text, int dim = 1) { return Expression::parse(text, dim); }

// brute-force conjugate on a dense slope grid, refined by golden section;
// deliberately independent of the oracle's root-finding path
double brute_conjugate(const Expression& h, double z, double plo, double phi) {
  const int n = 20000;
  double best = -1e300, parg = plo;
  for (int i = 0; i <= n; ++i) {
    const double p = plo + (phi - plo) * i / n;
    const double v = z * p - h(p);
    if (v > best) {
      best = v;
      parg = p;
    }
  }
  const double pad = (phi - plo) / n;
  const auto [pm, fm] = golden_min([&](double p) { return h(p) - z * p; },
                                   parg - pad, parg + pad, 1e-12);
  return -fm;
}

}  // namespace

TEST_CASE("conjugate of the pure quadratic is itself") {
  const ConjugateOracle oracle(ex("0.5*p^2"));
  for (double z : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    double v, a;
    oracle.value_grad1(z, &v, &a);
    CHECK(v == doctest::Approx(0.5 * z * z).epsilon(1e-12));
    CHECK(a == doctest::Approx(z).epsilon(1e-9));
  }
}

TEST_CASE("quartic conjugate fixed values") {
  const ConjugateOracle oracle(ex("0.25*p^4"));
  double v, a;
  oracle.value_grad1(1.0, &v, &a);
  CHECK(v == doctest::Approx(0.75).epsilon(1e-9));  // (3/4) z^(4/3) at z = 1
  CHECK(a == doctest::Approx(1.0).epsilon(1e-7));
  oracle.value_grad1(2.0, &v, &a);
  CHECK(a == doctest::Approx(std::cbrt(2.0)).epsilon(1e-7));
  CHECK(v == doctest::Approx(0.75 * std::pow(2.0, 4.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("tilted quadratic shifts the conjugate") {
  const ConjugateOracle oracle(ex("0.5*p^2 + p"));
  for (double z : {-2.0, 0.0, 1.0, 3.0}) {
    CHECK(oracle.value1(z) == doctest::Approx(0.5 * (z - 1) * (z - 1)).epsilon(1e-10));
  }
}

TEST_CASE("oracle agrees with a brute-force transform") {
  for (const char* text : {"0.5*p^2", "0.25*p^4", "0.5*p^2 + p", "p^2 + 0.1*p^4"}) {
    const Expression h = ex(text);
    const ConjugateOracle oracle(h);
    for (double z : {-1.5, -0.2, 0.9, 2.0}) {
      CHECK(oracle.value1(z) ==
            doctest::Approx(brute_conjugate(h, z, -8.0, 8.0)).epsilon(1e-7));
    }
  }
}

TEST_CASE("sweep matches pointwise values on an ascending grid") {
  const ConjugateOracle oracle(ex("0.5*p^2 + p"));
  std::vector<double> vals, args;
  const int n = 101;
  oracle.sweep1(-2.0, 4.0 / (n - 1), n, &vals, &args);
  for (int i = 0; i < n; i += 7) {
    const double z = -2.0 + 4.0 * i / (n - 1);
    CHECK(vals[i] == doctest::Approx(oracle.value1(z)).epsilon(1e-4));
  }
}

TEST_CASE("velocity bound is the extreme slope") {
  CHECK(ConjugateOracle(ex("0.5*p^2")).velocity_bound(2.0) == doctest::Approx(2.0));
  CHECK(ConjugateOracle(ex("0.25*p^4")).velocity_bound(2.0) == doctest::Approx(8.0));
  CHECK(ConjugateOracle(ex("0.5*(p^2+q^2)", 2)).velocity_bound(3.0) ==
        doctest::Approx(3.0));
}

TEST_CASE("2-D conjugate: separable and coupled quadratics") {
  const ConjugateOracle sep(ex("0.5*p^2 + 0.5*q^2", 2));
  double v, a[2];
  const double z[2] = {1.0, -2.0};
  sep.value_grad2(z, &v, a);
  CHECK(v == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(a[1] == doctest::Approx(-2.0).epsilon(1e-7));

  // H = (1/2) p'Ap with A = [[1, 1/4], [1/4, 1]]: H*(z) = (1/2) z'A^{-1}z
  const ConjugateOracle coupled(ex("0.5*(p^2 + q^2) + 0.25*p*q", 2));
  const double det = 1.0 - 0.0625;
  const double inv00 = 1.0 / det, inv01 = -0.25 / det;
  for (const auto& zz : {std::pair{1.0, 0.5}, std::pair{-0.3, 1.2}}) {
    const double zv[2] = {zz.first, zz.second};
    coupled.value_grad2(zv, &v, a);
    const double expect = 0.5 * (inv00 * (zv[0] * zv[0] + zv[1] * zv[1]) +
                                 2 * inv01 * zv[0] * zv[1]);
    CHECK(v == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("grid transform biconjugate returns the function") {
  const double L = 3.0;
  for (const char* text : {"0.5*x^2", "0.25*x^4", "0.5*x^2 + x"}) {
    const ScalarFunction f = ScalarFunction::from_expression(ex(text));
    const double slope_hi =
        std::max(std::abs(f.deriv1(-L, -1)), std::abs(f.deriv1(L, +1)));
    const int n = 2049;
    const ScalarFunction conj = fenchel_conjugate(f, -slope_hi, slope_hi, n);
    const ScalarFunction biconj = fenchel_conjugate(conj, -L, L, n);
    const double dual_step = 2 * slope_hi / (n - 1);
    const double bound = 5.0 * dual_step * slope_hi;
    double worst = 0.0;
    for (double x = -0.8 * L; x <= 0.8 * L; x += 0.05)
      worst = std::max(worst, std::abs(biconj(x) - f(x)));
    CHECK(worst <= bound);
  }
}

TEST_CASE("uniform convexity and semiconcavity estimates on references") {
  const ScalarFunction sq = ScalarFunction::from_expression(ex("x^2"));
  CHECK(estimate_uniform_convexity(sq, -2.0, 2.0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(estimate_semiconcavity(sq, -2.0, 2.0).constant ==
        doctest::Approx(2.0).epsilon(1e-3));

  const ScalarFunction vee = ScalarFunction::from_expression(ex("abs(x)"));
  CHECK(estimate_semiconcavity(vee, -2.0, 2.0).infinite);

  const ScalarFunction cap = ScalarFunction::from_expression(ex("-abs(x)"));
  const auto est = estimate_semiconcavity(cap, -2.0, 2.0);
  CHECK_FALSE(est.infinite);
  CHECK(est.constant == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("constant duality between convexity and semiconcavity") {
  // For convex v: the sharp semiconcavity constant of v* is at most
  // 1/(2 Lambda(v)), and the uniform-convexity constant of v* is at least
  // 1/(2 C(v)); quadratics attain both with equality.
  struct Case {
    const char* text;
    double lo, hi;
  };
  for (const Case& c : {Case{"0.5*x^2", -3, 3}, Case{"x^2 + 0.5*x", -3, 3},
                        Case{"0.25*x^4", -2, 2}}) {
    const ScalarFunction v = ScalarFunction::from_expression(ex(c.text));
    const double slope_hi =
        std::max(std::abs(v.deriv1(c.lo, -1)), std::abs(v.deriv1(c.hi, +1)));
    // sample the conjugate through the exact oracle: grid-transform scallops
    // would otherwise drown the second-difference estimators
    std::string ptext(c.text);
    for (char& ch : ptext)
      if (ch == 'x') ch = 'p';
    const ConjugateOracle oracle(Expression::parse(ptext, 1));
    const double zs = 0.9 * slope_hi;
    const int m = 1025;
    std::vector<double> cvals(m);
    for (int i = 0; i < m; ++i)
      cvals[i] = oracle.value1(-zs + 2 * zs * i / (m - 1));
    const ScalarFunction conj =
        ScalarFunction::grid1(-zs, 2 * zs / (m - 1), std::move(cvals));
    const double lambda = estimate_uniform_convexity(v, c.lo, c.hi);
    const auto cstar = estimate_semiconcavity(conj, -zs, zs, m);
    if (cstar.infinite) {
      // conjugate curvature blows up only where v has no convexity floor
      CHECK(lambda <= 1e-4);
    } else if (lambda > 1e-4) {
      CHECK(cstar.constant <= 1.0 / (2 * lambda) + 1e-2);
    }
    const auto cv = estimate_semiconcavity(v, c.lo, c.hi);
    const double lamstar = estimate_uniform_convexity(conj, -zs, zs, m);
    if (!cv.infinite && cv.constant > 1e-9)
      CHECK(lamstar >= 1.0 / (2 * cv.constant) - 1e-2);
  }
}

TEST_CASE("convexity analysis flags a concave field with a witness") {
  const ScalarFunction bad = ScalarFunction::from_expression(ex("-x^2"));
  const ConvexityReport rep = analyze_convexity(bad, -2.0, 2.0);
  CHECK_FALSE(rep.convex);
  CHECK(rep.has_witness);
  const double y1 = rep.witness[0], mid = rep.witness[1], y2 = rep.witness[2];
  CHECK(0.5 * (bad(y1) + bad(y2)) < bad(mid));
  const ConvexityReport good = analyze_convexity(
      ScalarFunction::from_expression(ex("0.5*x^2")), -2.0, 2.0);
  CHECK(good.convex);
  CHECK(good.strictly_convex);
  CHECK(good.superlinear);
}
