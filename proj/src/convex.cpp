#include "hopflax/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hopflax/util.hpp"

namespace hopflax {

namespace {

double one_sided(const Expression& e, double x, int side) {
  return e.deriv1(x, side);
}

}  // namespace

ConjugateOracle::ConjugateOracle(Expression H) : H_(std::move(H)), dim_(H_.dimension()) {
  if (H_.empty()) throw InputError("empty Hamiltonian");
  if (dim_ == 2) {
    std::vector<Expression> parts;
    if (H_.separable_parts(&parts)) {
      separable_ = true;
      part_[0] = std::move(parts[0]);
      part_[1] = std::move(parts[1]);
    } else {
      build_cache();
    }
  }
}

void ConjugateOracle::h_grad(std::span<const double> p, double* out) const {
  for (int a = 0; a < dim_; ++a) out[a] = H_.deriv(p, a, +1);
}

// bracketed bisection for the maximizer of z*p - h(p); h' nondecreasing
double ConjugateOracle::solve_primal(const Expression& h, double z) const {
  double w = 2.0 * (1.0 + std::abs(z));
  double lo = -w, hi = w;
  int expansions = 0;
  while (one_sided(h, hi, +1) < z) {
    hi *= 2.0;
    if (++expansions > 6) {
      // argmax escapes every expansion of the primal window
      throw HypothesisError("conjugate undefined on window: Hamiltonian growth is not superlinear");
    }
  }
  expansions = 0;
  while (one_sided(h, lo, -1) > z) {
    lo *= 2.0;
    if (++expansions > 6)
      throw HypothesisError("conjugate undefined on window: Hamiltonian growth is not superlinear");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (one_sided(h, mid, +1) >= z) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

void ConjugateOracle::value_grad1(double z, double* val, double* arg) const {
  if (dim_ != 1) throw InputError("value_grad1 needs a 1-D Hamiltonian");
  const double p = solve_primal(H_, z);
  if (arg) *arg = p;
  if (val) *val = z * p - H_(p);
}

void ConjugateOracle::value_grad2(const double z[2], double* val, double arg[2]) const {
  if (dim_ != 2) throw InputError("value_grad2 needs a 2-D Hamiltonian");
  if (separable_) {
    double v = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double p = solve_primal(part_[a], z[a]);
      arg[a] = p;
      v += z[a] * p - part_[a](p);
    }
    if (val) *val = v;
    return;
  }
  // seed from the cached argmax grid, then coordinate ascent
  double seed[2] = {0.0, 0.0};
  if (cn_[0] > 0) {
    const int i = std::clamp(static_cast<int>(std::round((z[0] - cz0_[0]) / cdz_[0])), 0, cn_[0] - 1);
    const int j = std::clamp(static_cast<int>(std::round((z[1] - cz0_[1]) / cdz_[1])), 0, cn_[1] - 1);
    const std::size_t at = 2 * (static_cast<std::size_t>(j) * cn_[0] + i);
    seed[0] = cache_arg_[at];
    seed[1] = cache_arg_[at + 1];
  }
  double p[2] = {seed[0], seed[1]};
  auto score = [&](double a, double b) {
    const double pt[2] = {a, b};
    return z[0] * a + z[1] * b - H_.eval(std::span<const double>(pt, 2));
  };
  double radius = 1.0 + 0.25 * (std::abs(p[0]) + std::abs(p[1]));
  for (int round = 0; round < 40; ++round) {
    const double before[2] = {p[0], p[1]};
    for (int axis = 0; axis < 2; ++axis) {
      auto line = [&](double t) { return axis == 0 ? -score(t, p[1]) : -score(p[0], t); };
      // expand the bracket until the best point is interior
      double lo = p[axis] - radius, hi = p[axis] + radius;
      for (int e = 0; e < 8; ++e) {
        if (line(lo) > line(p[axis]) && line(hi) > line(p[axis])) break;
        lo -= radius;
        hi += radius;
        radius *= 2.0;
      }
      p[axis] = golden_min(line, lo, hi, 1e-12 * (1.0 + std::abs(p[axis]))).first;
    }
    const double move = std::abs(p[0] - before[0]) + std::abs(p[1] - before[1]);
    radius = std::max(1e-6, 0.5 * radius);
    if (move < 1e-13 * (1.0 + std::abs(p[0]) + std::abs(p[1]))) break;
  }
  arg[0] = p[0];
  arg[1] = p[1];
  if (val) *val = score(p[0], p[1]);
}

void ConjugateOracle::sweep1(double z0, double dz, int n, std::vector<double>* vals,
                             std::vector<double>* args) const {
  if (dim_ != 1) throw InputError("sweep1 needs a 1-D Hamiltonian");
  if (n < 1 || !(dz > 0)) throw InputError("sweep needs an ascending dual grid");
  const double z_end = z0 + dz * (n - 1);
  double w = 2.0 * (1.0 + std::max(std::abs(z0), std::abs(z_end)));
  double plo = -w, phi = w;
  int expansions = 0;
  while (one_sided(H_, phi, +1) < z_end) {
    phi *= 2.0;
    if (++expansions > 6)
      throw HypothesisError("conjugate undefined on window: Hamiltonian growth is not superlinear");
  }
  expansions = 0;
  while (one_sided(H_, plo, -1) > z0) {
    plo *= 2.0;
    if (++expansions > 6)
      throw HypothesisError("conjugate undefined on window: Hamiltonian growth is not superlinear");
  }
  const int m = std::max(2 * n, 1024);
  const double dp = (phi - plo) / m;
  std::vector<double> hv(static_cast<std::size_t>(m) + 1);
  for (int j = 0; j <= m; ++j) hv[static_cast<std::size_t>(j)] = H_(plo + dp * j);
  vals->resize(static_cast<std::size_t>(n));
  if (args) args->resize(static_cast<std::size_t>(n));
  int j = 0;
  for (int i = 0; i < n; ++i) {
    const double z = z0 + dz * i;
    auto g = [&](int k) { return z * (plo + dp * k) - hv[static_cast<std::size_t>(k)]; };
    while (j + 1 <= m && g(j + 1) >= g(j)) ++j;  // argmax is nondecreasing in z
    (*vals)[static_cast<std::size_t>(i)] = g(j);
    if (args) (*args)[static_cast<std::size_t>(i)] = plo + dp * j;
  }
}

double ConjugateOracle::velocity_bound(double L) const {
  if (dim_ == 1) {
    return std::max(std::abs(one_sided(H_, -L, -1)), std::abs(one_sided(H_, L, +1)));
  }
  if (separable_) {
    double b = 0.0;
    for (int a = 0; a < 2; ++a)
      b = std::max(b, std::max(std::abs(one_sided(part_[a], -L, -1)),
                               std::abs(one_sided(part_[a], L, +1))));
    return b;
  }
  double best = 0.0;
  const int m = 64;
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= m; ++i) {
      const double pt[2] = {-L + 2 * L * i / m, -L + 2 * L * j / m};
      double g[2] = {0.0, 0.0};
      h_grad(std::span<const double>(pt, 2), g);
      best = std::max({best, std::abs(g[0]), std::abs(g[1])});
    }
  return best;
}

void ConjugateOracle::build_cache() {
  // modest dual window; queries outside still work via coordinate ascent
  const double Z = 8.0;
  const int n = 33;
  cz0_[0] = cz0_[1] = -Z;
  cdz_[0] = cdz_[1] = 2 * Z / (n - 1);
  cn_[0] = cn_[1] = n;
  cache_arg_.assign(2u * n * n, 0.0);
  const double P = 8.0;
  const int m = 96;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double z[2] = {cz0_[0] + cdz_[0] * i, cz0_[1] + cdz_[1] * j};
      double best = -std::numeric_limits<double>::infinity();
      double ba = 0, bb = 0;
      for (int v = 0; v <= m; ++v)
        for (int u = 0; u <= m; ++u) {
          const double pt[2] = {-P + 2 * P * u / m, -P + 2 * P * v / m};
          const double s = z[0] * pt[0] + z[1] * pt[1] - H_.eval(std::span<const double>(pt, 2));
          if (s > best) {
            best = s;
            ba = pt[0];
            bb = pt[1];
          }
        }
      const std::size_t at = 2 * (static_cast<std::size_t>(j) * n + i);
      cache_arg_[at] = ba;
      cache_arg_[at + 1] = bb;
    }
  }
}

// ------------------------------------------------------------- grid transform

ScalarFunction fenchel_conjugate(const ScalarFunction& f, double dual_lo,
                                 double dual_hi, int dual_resolution) {
  if (!(dual_hi > dual_lo)) throw InputError("empty dual window");
  if (dual_resolution < 16) throw InputError("dual resolution below 16");
  if (f.dimension() != 1) throw InputError("grid transform is 1-D");
  const int n = dual_resolution;
  const double dz = (dual_hi - dual_lo) / (n - 1);
  std::vector<double> vals(static_cast<std::size_t>(n)), args(static_cast<std::size_t>(n));

  if (f.repr() == ScalarFunction::Repr::Grid) {
    // primal points are the grid's own nodes: conjugate of the sampled
    // function with +inf outside its window
    const int m = f.grid_n(0);
    const double p0 = f.grid_x0(0), dp = f.grid_dx(0);
    const auto& fv = f.grid_values();
    int j = 0;
    for (int i = 0; i < n; ++i) {
      const double z = dual_lo + dz * i;
      auto g = [&](int k) { return z * (p0 + dp * k) - fv[static_cast<std::size_t>(k)]; };
      // convex f: z*p - f(p) is concave over the nodes and its argmax is
      // nondecreasing in z, so one climbing pointer serves the whole grid
      while (j + 1 < m && g(j + 1) >= g(j)) ++j;
      vals[static_cast<std::size_t>(i)] = g(j);
      args[static_cast<std::size_t>(i)] = p0 + dp * j;
    }
  } else {
    ConjugateOracle oracle(*f.expression());
    for (int i = 0; i < n; ++i) {
      const double z = dual_lo + dz * i;
      oracle.value_grad1(z, &vals[static_cast<std::size_t>(i)], &args[static_cast<std::size_t>(i)]);
    }
  }
  ScalarFunction out = ScalarFunction::grid1(dual_lo, dz, std::move(vals));
  out.mutable_argmax() = std::move(args);
  return out;
}

double conjugate_gradient(const ScalarFunction& conj, double z) {
  if (conj.repr() != ScalarFunction::Repr::Grid || !conj.has_argmax())
    throw InputError("conjugate_gradient needs a transform result with an argmax map");
  const double x0 = conj.grid_x0(0), dx = conj.grid_dx(0);
  const int n = conj.grid_n(0);
  const double hi = x0 + dx * (n - 1);
  if (z < x0 - 1e-12 || z > hi + 1e-12)
    throw InputError("query outside the dual window");
  const double u = std::clamp((z - x0) / dx, 0.0, static_cast<double>(n - 1));
  const int i = std::min(static_cast<int>(u), n - 2);
  const double s = u - i;
  const auto& a = conj.argmax();
  return a[static_cast<std::size_t>(i)] * (1.0 - s) + a[static_cast<std::size_t>(i + 1)] * s;
}

// --------------------------------------------------------------- constants

namespace {

struct PairScan {
  // extremes of 4*(f(a) + f(b) - 2 f(mid)) / |a-b|^2 over same-parity pairs,
  // tracked per half-gap k to expose divergence as the gap shrinks
  std::vector<double> max_by_gap, min_by_gap;
  double global_max = 0.0;
  double global_min = std::numeric_limits<double>::infinity();
};

PairScan scan_pairs(const std::vector<double>& v, double h) {
  PairScan out;
  const int n = static_cast<int>(v.size());
  for (int k = 1; 2 * k < n; k *= 2) {
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (int i = k; i + k < n; ++i) {
      const double excess = v[static_cast<std::size_t>(i - k)] + v[static_cast<std::size_t>(i + k)] -
                            2.0 * v[static_cast<std::size_t>(i)];
      const double d = 2.0 * k * h;
      const double c = 4.0 * excess / (d * d);
      mx = std::max(mx, c);
      mn = std::min(mn, c);
    }
    out.max_by_gap.push_back(mx);
    out.min_by_gap.push_back(mn);
    out.global_max = std::max(out.global_max, mx);
    out.global_min = std::min(out.global_min, mn);
  }
  return out;
}

std::vector<double> sample(const ScalarFunction& f, double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = f(lo + h * i);
  return v;
}

}  // namespace

double estimate_uniform_convexity(const ScalarFunction& f, double lo, double hi,
                                  int resolution, double tol) {
  if (f.dimension() != 1) throw InputError("convexity constants are 1-D");
  if (!(hi > lo) || resolution < 16) throw InputError("bad window");
  const double h = (hi - lo) / (resolution - 1);
  const PairScan s = scan_pairs(sample(f, lo, hi, resolution), h);
  //  f - L y^2 midpoint-convex  <=>  L <= c(pair)/2 for every pair
  const double lambda = 0.5 * s.global_min;
  return lambda > tol ? lambda : 0.0;
}

SemiconcavityEstimate estimate_semiconcavity(const ScalarFunction& f, double lo,
                                             double hi, int resolution, double tol) {
  if (f.dimension() != 1) throw InputError("convexity constants are 1-D");
  if (!(hi > lo) || resolution < 16) throw InputError("bad window");
  const double h = (hi - lo) / (resolution - 1);
  const PairScan s = scan_pairs(sample(f, lo, hi, resolution), h);
  SemiconcavityEstimate out;
  // divergence: for a corner the requirement grows like 1/gap, so comparing
  // the finest gap against an 8x coarser one sees a factor >= 4 regardless of
  // how the corner sits relative to the nodes; smooth data stays near 1
  if (s.max_by_gap.size() >= 4) {
    const double c_fine = s.max_by_gap[0];
    const double c_coarse = std::max(s.max_by_gap[3], 1e-9);
    if (c_fine > 2.2 * c_coarse && c_fine * h > 0.3) {
      out.infinite = true;
      out.constant = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  out.constant = std::max(0.0, s.global_max);
  if (out.constant < tol) out.constant = 0.0;
  return out;
}

ConvexityReport analyze_convexity(const ScalarFunction& f, double lo, double hi,
                                  int resolution) {
  if (f.dimension() != 1) throw InputError("analyze_convexity is 1-D");
  if (!(hi > lo) || resolution < 16) throw InputError("bad window");
  ConvexityReport r;
  const int n = resolution;
  const double h = (hi - lo) / (n - 1);
  const std::vector<double> v = sample(f, lo, hi, n);
  double scale = 1.0;
  for (double x : v) scale = std::max(scale, std::abs(x));

  r.convex = true;
  for (int i = 1; i + 1 < n && r.convex; ++i) {
    const double excess = v[static_cast<std::size_t>(i - 1)] + v[static_cast<std::size_t>(i + 1)] -
                          2.0 * v[static_cast<std::size_t>(i)];
    if (excess < -1e-10 * scale) {
      r.convex = false;
      r.has_witness = true;
      r.witness = {lo + h * (i - 1), lo + h * i, lo + h * (i + 1)};
    }
  }

  // strictness: no flat run of the one-sided derivative
  r.strictly_convex = r.convex;
  if (r.convex) {
    if (f.repr() == ScalarFunction::Repr::Grid) {
      for (int i = 1; i + 1 < n && r.strictly_convex; ++i) {
        const double excess = v[static_cast<std::size_t>(i - 1)] + v[static_cast<std::size_t>(i + 1)] -
                              2.0 * v[static_cast<std::size_t>(i)];
        if (excess <= 1e-12 * scale) r.strictly_convex = false;
      }
    } else {
      double prev = f.deriv1(lo, +1);
      for (int i = 1; i < n && r.strictly_convex; ++i) {
        const double cur = f.deriv1(lo + h * i, +1);
        if (cur <= prev + 1e-13 * (1.0 + std::abs(prev))) r.strictly_convex = false;
        prev = cur;
      }
    }
  }

  // windowed superlinearity: end slopes keep growing across dyadic expansions
  auto slope = [&](double x, int side) { return f.deriv_one_sided(std::span<const double>(&x, 1), 0, side); };
  const double W = std::max(std::abs(lo), std::abs(hi));
  if (f.repr() == ScalarFunction::Repr::Grid) {
    const double d_mid = slope(0.5 * W, +1), d_end = slope(0.95 * W, +1);
    const double d_midm = slope(-0.5 * W, -1), d_endm = slope(-0.95 * W, -1);
    r.superlinear = d_end > 1.1 * std::max(d_mid, 0.0) + 1e-3 &&
                    d_endm < 1.1 * std::min(d_midm, 0.0) - 1e-3;
  } else {
    r.superlinear = slope(2 * W, +1) >= 1.2 * std::max(slope(W, +1), 0.0) + 1e-3 &&
                    slope(4 * W, +1) >= 1.2 * std::max(slope(2 * W, +1), 0.0) + 1e-3 &&
                    slope(-2 * W, -1) <= 1.2 * std::min(slope(-W, -1), 0.0) - 1e-3 &&
                    slope(-4 * W, -1) <= 1.2 * std::min(slope(-2 * W, -1), 0.0) - 1e-3;
  }

  r.uniform_convexity = estimate_uniform_convexity(f, lo, hi, resolution);
  r.semiconcavity = estimate_semiconcavity(f, lo, hi, resolution);
  return r;
}

}  // namespace hopflax
