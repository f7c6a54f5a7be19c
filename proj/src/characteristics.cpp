#include "hopflax/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hopflax/semidiff.hpp"
#include "hopflax/util.hpp"

namespace hopflax {

namespace {

double norm2(std::span<const double> v) {
  double s = 0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

void require_min_form(const Problem& prob, const char* op) {
  if (prob.concave())
    throw InputError(std::string(op) + " applies to the min-form problem");
}

double forced_slope(const ConjugateOracle& conj, double z) {
  double val, arg;
  conj.value_grad1(z, &val, &arg);
  return arg;
}

}  // namespace

Characteristic forward_curve(const Problem& prob, std::span<const double> origin,
                             std::span<const double> slope) {
  require_min_form(prob, "forward_curve");
  const int dim = prob.dim();
  if (static_cast<int>(origin.size()) != dim || static_cast<int>(slope.size()) != dim)
    throw InputError("origin/slope dimension mismatch");

  const DSharpSet ds = d_sharp(prob.data(), origin);
  const double tol = 1e-6 * (1.0 + norm2(slope)) + 1e-9;
  Characteristic c;
  c.dim = dim;
  if (ds.sup.contains(slope, tol))
    c.branch = Branch::Sup;
  else if (ds.sub.contains(slope, tol))
    c.branch = Branch::Sub;
  else if (ds.zero_fallback && norm2(slope) <= tol)
    c.branch = Branch::ZeroFallback;
  else
    throw InputError("slope is not an admissible datum derivative at the origin");

  for (int a = 0; a < dim; ++a) {
    c.origin[static_cast<std::size_t>(a)] = origin[static_cast<std::size_t>(a)];
    c.slope[static_cast<std::size_t>(a)] = slope[static_cast<std::size_t>(a)];
  }
  double grad[2] = {0, 0};
  prob.conjugate().h_grad(slope, grad);
  c.velocity = {grad[0], grad[1]};
  return c;
}

namespace {

struct RawOrigin {
  double y = 0.0;
  bool from_minimizer = false;
};

// 1-D membership scan: datum kinks by direct bundle membership of the forced
// slope, smooth stretches by sign changes of r(y) = q(y) - sigma'(y+).
std::vector<RawOrigin> scan_origins_1d(const Problem& prob, double t, double x,
                                       const MinimizerSet& ms) {
  const ConjugateOracle& conj = prob.conjugate();
  const ScalarFunction& sigma = prob.data();
  const double reach = prob.ball().radius(t);
  const double pad = 1e-3 * (1.0 + reach);
  const double wlo = x - reach - pad, whi = x + reach + pad;

  auto q_at = [&](double y) { return forced_slope(conj, (x - y) / t); };
  auto r_at = [&](double y) { return q_at(y) - sigma.deriv1(y, +1); };

  std::vector<RawOrigin> out;
  const std::vector<double> kinks = sigma.kinks(wlo, whi);
  for (double k : kinks) {
    const double qk = q_at(k);
    const double tol = 1e-6 * (1.0 + std::abs(qk));
    if (d_sharp(sigma, std::span<const double>(&k, 1))
            .contains(std::span<const double>(&qk, 1), tol))
      out.push_back({k, false});
  }

  // scan nodes, split around kinks so each bracket is one-sided smooth
  const int kScanNodes = 2048;
  std::vector<double> nodes = linspace(wlo, whi, kScanNodes);
  for (double k : kinks) {
    const double delta = 1e-9 * (1.0 + std::abs(k));
    if (k - delta > wlo) nodes.push_back(k - delta);
    if (k + delta < whi) nodes.push_back(k + delta);
  }
  std::sort(nodes.begin(), nodes.end());

  std::vector<double> rv(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) rv[i] = r_at(nodes[i]);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i], b = nodes[i + 1];
    bool crosses_kink = false;
    for (double k : kinks) crosses_kink = crosses_kink || (a < k && k < b);
    if (crosses_kink) continue;
    if (!(rv[i] == 0.0 || rv[i] * rv[i + 1] < 0.0)) continue;
    double lo = a, hi = b, rlo = rv[i];
    for (int it = 0; it < 70 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double rm = r_at(mid);
      if (rm == 0.0 || (rlo < 0) == (rm < 0)) {
        lo = mid;
        rlo = rm;
      } else {
        hi = mid;
      }
    }
    out.push_back({0.5 * (lo + hi), false});
  }

  for (const Minimizer& m : ms.points) out.push_back({m.y[0], true});
  return out;
}

PreimageSet preimage_1d(const Problem& prob, double t, double x,
                        const EvalOptions& opt) {
  PreimageSet set;
  set.minimizers = minimizer_set(prob, t, std::span<const double>(&x, 1), opt);

  std::vector<RawOrigin> raw = scan_origins_1d(prob, t, x, set.minimizers);
  std::sort(raw.begin(), raw.end(), [](const RawOrigin& a, const RawOrigin& b) {
    return a.y != b.y ? a.y < b.y : a.from_minimizer > b.from_minimizer;
  });

  std::vector<RawOrigin> merged;
  for (const RawOrigin& r : raw) {
    const double tol = 1e-7 * (1.0 + std::abs(r.y));
    if (!merged.empty() && r.y - merged.back().y <= tol) {
      merged.back().from_minimizer = merged.back().from_minimizer || r.from_minimizer;
      continue;
    }
    merged.push_back(r);
  }

  for (const RawOrigin& r : merged) {
    PreimagePoint p;
    p.y[0] = r.y;
    p.q[0] = forced_slope(prob.conjugate(), (x - r.y) / t);
    p.type_one = r.from_minimizer;
    for (const Minimizer& m : set.minimizers.points)
      p.type_one = p.type_one || std::abs(m.y[0] - r.y) <= 1e-6 * (1.0 + std::abs(r.y));
    set.points.push_back(p);
  }
  return set;
}

// replace standalone occurrences of the variable "x" with "abs(x)";
// identifiers like "exp" or "max" are left alone
std::string evenized(const std::string& s) {
  std::string out;
  auto word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool standalone = s[i] == 'x' && (i == 0 || !word_char(s[i - 1])) &&
                            (i + 1 == s.size() || !word_char(s[i + 1]));
    if (standalone)
      out += "abs(x)";
    else
      out += s[i];
  }
  return out;
}

Problem axis_problem(const Problem& prob, const Expression& h, const Expression& s,
                     int axis) {
  Problem::Config cfg;
  cfg.hamiltonian = h;
  cfg.data = ScalarFunction::from_expression(s);
  cfg.horizon = prob.horizon();
  cfg.window_lo[0] = prob.window_lo(axis);
  cfg.window_hi[0] = prob.window_hi(axis);
  cfg.name = prob.name() + "/axis" + std::to_string(axis);
  return Problem::make_unchecked(std::move(cfg));
}

PreimageSet preimage_2d(const Problem& prob, double t, std::span<const double> x,
                        const EvalOptions& opt) {
  const Expression* sigma_expr = prob.data().expression();
  std::vector<Expression> hp, sp;
  Expression h_prof, s_prof;

  PreimageSet set;
  set.minimizers = minimizer_set(prob, t, x, opt);
  auto near_minimizer = [&](const std::array<double, 2>& y) {
    for (const Minimizer& m : set.minimizers.points)
      if (std::hypot(m.y[0] - y[0], m.y[1] - y[1]) <= 1e-6 * (1.0 + std::hypot(y[0], y[1])))
        return true;
    return false;
  };

  if (sigma_expr && prob.field().separable_parts(&hp) &&
      sigma_expr->separable_parts(&sp)) {
    PreimageSet axis_sets[2];
    for (int a = 0; a < 2; ++a) {
      Problem ap = axis_problem(prob, hp[static_cast<std::size_t>(a)],
                                sp[static_cast<std::size_t>(a)], a);
      axis_sets[a] = preimage_1d(ap, t, x[static_cast<std::size_t>(a)], opt);
    }
    for (const PreimagePoint& p1 : axis_sets[0].points)
      for (const PreimagePoint& p2 : axis_sets[1].points) {
        PreimagePoint p;
        p.y = {p1.y[0], p2.y[0]};
        p.q = {p1.q[0], p2.q[0]};
        p.type_one = (p1.type_one && p2.type_one) || near_minimizer(p.y);
        set.points.push_back(p);
      }
    return set;
  }

  if (sigma_expr && prob.field().radial_profile(&h_prof) &&
      sigma_expr->radial_profile(&s_prof)) {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0)
      throw InputError("radial reduction is singular at the origin; "
                       "query a nonzero point");
    const double dir[2] = {x[0] / r, x[1] / r};
    const Expression h1 = Expression::parse(evenized(h_prof.str()), 1);
    const Expression s1 = Expression::parse(evenized(s_prof.str()), 1);
    Problem::Config cfg;
    cfg.hamiltonian = h1;
    cfg.data = ScalarFunction::from_expression(s1);
    cfg.horizon = prob.horizon();
    const double span = std::max(std::abs(prob.window_lo(0)), std::abs(prob.window_hi(0))) +
                        std::max(std::abs(prob.window_lo(1)), std::abs(prob.window_hi(1)));
    cfg.window_lo[0] = -span - 1.0;
    cfg.window_hi[0] = span + 1.0;
    cfg.name = prob.name() + "/ray";
    Problem ray = Problem::make_unchecked(std::move(cfg));
    PreimageSet line = preimage_1d(ray, t, r, opt);
    for (const PreimagePoint& lp : line.points) {
      PreimagePoint p;
      p.y = {lp.y[0] * dir[0], lp.y[0] * dir[1]};
      p.q = {lp.q[0] * dir[0], lp.q[0] * dir[1]};
      p.type_one = lp.type_one || near_minimizer(p.y);
      set.points.push_back(p);
    }
    return set;
  }

  throw InputError("2-D preimages need a separable or radial problem");
}

}  // namespace

PreimageSet preimage_set(const Problem& prob, double t, std::span<const double> x,
                         const EvalOptions& opt) {
  require_min_form(prob, "preimage_set");
  if (!(t > opt.t_min)) throw InputError("preimage needs t above the boundary regime");
  if (static_cast<int>(x.size()) != prob.dim())
    throw InputError("query point dimension mismatch");
  return prob.dim() == 1 ? preimage_1d(prob, t, x[0], opt) : preimage_2d(prob, t, x, opt);
}

CurveType classify_curve(const Problem& prob, const Characteristic& curve, double t,
                         std::span<const double> x, const EvalOptions& opt) {
  require_min_form(prob, "classify_curve");
  if (static_cast<int>(x.size()) != curve.dim || prob.dim() != curve.dim)
    throw InputError("query point dimension mismatch");
  if (!(t > opt.t_min)) throw InputError("classification needs t above the boundary regime");

  const std::array<double, 2> arrive = curve.at(t);
  double miss = 0;
  for (int a = 0; a < curve.dim; ++a)
    miss = std::max(miss, std::abs(arrive[static_cast<std::size_t>(a)] -
                                   x[static_cast<std::size_t>(a)]));
  const double xscale = norm2(x);
  if (miss > 1e-6 * (1.0 + xscale) + 1e-9) return CurveType::NotThrough;

  const MinimizerSet ms = minimizer_set(prob, t, x, opt);
  const double yscale = norm2(std::span<const double>(
      curve.origin.data(), static_cast<std::size_t>(curve.dim)));
  for (const Minimizer& m : ms.points) {
    double d = 0;
    for (int a = 0; a < curve.dim; ++a)
      d = std::max(d, std::abs(m.y[static_cast<std::size_t>(a)] -
                               curve.origin[static_cast<std::size_t>(a)]));
    if (d <= 1e-5 * (1.0 + yscale)) return CurveType::I;
  }
  return CurveType::II;
}

ClassifyAlongReport classify_along(const Problem& prob, const Characteristic& curve,
                                   std::span<const double> times,
                                   const EvalOptions& opt) {
  require_min_form(prob, "classify_along");
  ClassifyAlongReport rep;
  if (times.empty()) {
    const double T = prob.horizon();
    const double lo = std::log(T * 1e-3), hi = std::log(T);
    for (int i = 0; i < 64; ++i)
      rep.times.push_back(std::exp(lo + (hi - lo) * i / 63.0));
  } else {
    rep.times.assign(times.begin(), times.end());
    std::sort(rep.times.begin(), rep.times.end());
  }

  const double yscale = norm2(std::span<const double>(
      curve.origin.data(), static_cast<std::size_t>(curve.dim)));
  for (double tau : rep.times) {
    const std::array<double, 2> xt = curve.at(tau);
    const std::span<const double> xq(xt.data(), static_cast<std::size_t>(curve.dim));
    const MinimizerSet ms = minimizer_set(prob, tau, xq, opt);
    double dist = std::numeric_limits<double>::infinity();
    for (const Minimizer& m : ms.points) {
      double d = 0;
      for (int a = 0; a < curve.dim; ++a)
        d = std::max(d, std::abs(m.y[static_cast<std::size_t>(a)] -
                                 curve.origin[static_cast<std::size_t>(a)]));
      dist = std::min(dist, d);
    }
    const bool type_one = dist <= 1e-5 * (1.0 + yscale);
    rep.types.push_back(type_one ? CurveType::I : CurveType::II);
    rep.clean.push_back(type_one && ms.singleton() && dist <= 1e-4 * (1.0 + yscale) ? 1 : 0);
  }

  int last_one = -1;
  for (std::size_t i = 0; i < rep.types.size(); ++i)
    if (rep.types[i] == CurveType::I) last_one = static_cast<int>(i);
  rep.any_type_one = last_one >= 0;
  if (last_one < 0) {
    rep.theta_lo = 0.0;
    rep.theta_hi = rep.times.front();
  } else {
    rep.theta_lo = rep.times[static_cast<std::size_t>(last_one)];
    rep.theta_hi = last_one + 1 < static_cast<int>(rep.times.size())
                       ? rep.times[static_cast<std::size_t>(last_one) + 1]
                       : rep.theta_lo;
  }
  for (int i = 0; i < last_one; ++i) {
    if (rep.types[static_cast<std::size_t>(i)] == CurveType::II) rep.non_monotone = true;
    if (!rep.clean[static_cast<std::size_t>(i)]) ++rep.persistence_violations;
  }
  return rep;
}

std::vector<GradientPair> reachable_gradients(const Problem& prob, double t,
                                              std::span<const double> x,
                                              const EvalOptions& opt) {
  require_min_form(prob, "reachable_gradients");
  if (!(t > opt.t_min)) throw InputError("reachable gradients need t above the boundary regime");
  const MinimizerSet ms = minimizer_set(prob, t, x, opt);
  std::vector<GradientPair> out;
  for (const Minimizer& m : ms.points) {
    GradientPair g;
    if (prob.dim() == 1) {
      const double v = (x[0] - m.y[0]) / t;
      double val, arg;
      prob.conjugate().value_grad1(v, &val, &arg);
      g.p[0] = arg;
      g.p_t = val - v * arg;
    } else {
      const double v[2] = {(x[0] - m.y[0]) / t, (x[1] - m.y[1]) / t};
      double val, arg[2];
      prob.conjugate().value_grad2(v, &val, arg);
      g.p = {arg[0], arg[1]};
      g.p_t = val - v[0] * arg[0] - v[1] * arg[1];
    }
    out.push_back(g);
  }
  std::sort(out.begin(), out.end(), [](const GradientPair& a, const GradientPair& b) {
    return a.p[0] != b.p[0] ? a.p[0] < b.p[0] : a.p[1] < b.p[1];
  });
  std::vector<GradientPair> dedup;
  for (const GradientPair& g : out) {
    const double scale = 1.0 + std::hypot(g.p[0], g.p[1]);
    if (!dedup.empty() && std::abs(g.p[0] - dedup.back().p[0]) <= 1e-9 * scale &&
        std::abs(g.p[1] - dedup.back().p[1]) <= 1e-9 * scale)
      continue;
    dedup.push_back(g);
  }
  return dedup;
}

}  // namespace hopflax
