#include "hopflax/viscosity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "hopflax/characteristics.hpp"
#include "hopflax/semidiff.hpp"
#include "hopflax/util.hpp"

namespace hopflax {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double ham_1d(const Problem& prob, double q) { return prob.field()(q); }

// max of p_t + H(p) over the hull of the reachable pairs (1-D space).
// Along any chord the expression is convex, so vertices dominate; the
// interior and stationary samples are kept as a cross-check of that fact.
double hull_max_margin(const Problem& prob, const std::vector<GradientPair>& pairs) {
  const Expression& H = prob.field();
  double m = -kInf;
  auto consider = [&](double a, double q) { m = std::max(m, a + H(q)); };
  for (const GradientPair& g : pairs) consider(g.p_t, g.p[0]);
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    const double a1 = pairs[i].p_t, q1 = pairs[i].p[0];
    const double a2 = pairs[i + 1].p_t, q2 = pairs[i + 1].p[0];
    if (!(q2 > q1)) continue;
    const double s = (a2 - a1) / (q2 - q1);
    for (int k = 1; k <= 8; ++k) {
      const double q = q1 + (q2 - q1) * k / 9.0;
      consider(a1 + s * (q - q1), q);
    }
    // interior stationary point of the chord section: H'(q) = -s
    double lo = q1, hi = q2;
    if (H.deriv1(lo, +1) + s <= 0.0 && H.deriv1(hi, -1) + s >= 0.0) {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (H.deriv1(mid, +1) + s <= 0.0 ? lo : hi) = mid;
      }
      const double q = 0.5 * (lo + hi);
      consider(a1 + s * (q - q1), q);
    }
  }
  return m;
}

double hull_max_margin_2d(const Problem& prob, const std::vector<GradientPair>& pairs) {
  const Expression& H = prob.field();
  double m = -kInf;
  auto value = [&](double a, const std::array<double, 2>& p) { return a + H(p[0], p[1]); };
  for (const GradientPair& g : pairs) m = std::max(m, value(g.p_t, g.p));
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = i + 1; j < pairs.size(); ++j)
      for (int k = 1; k <= 8; ++k) {
        const double lam = k / 9.0;
        const std::array<double, 2> p = {
            pairs[i].p[0] + lam * (pairs[j].p[0] - pairs[i].p[0]),
            pairs[i].p[1] + lam * (pairs[j].p[1] - pairs[i].p[1])};
        m = std::max(m, value(pairs[i].p_t + lam * (pairs[j].p_t - pairs[i].p_t), p));
      }
  return m;
}

}  // namespace

PointVerdict check_viscosity_at(const Problem& prob, double t,
                                std::span<const double> x, double tol,
                                const EvalOptions& opt) {
  const std::vector<GradientPair> pairs = reachable_gradients(prob, t, x, opt);
  PointVerdict v;
  v.t = t;
  for (std::size_t a = 0; a < x.size(); ++a) v.x[a] = x[a];
  if (pairs.size() == 1) {
    v.differentiable = true;
    const double h = prob.dim() == 1 ? ham_1d(prob, pairs[0].p[0])
                                     : prob.field()(pairs[0].p[0], pairs[0].p[1]);
    v.residual = pairs[0].p_t + h;
    v.sub_margin = v.super_margin = v.residual;
    v.sub_ok = v.residual <= tol;
    v.super_ok = v.residual >= -tol;
    return v;
  }
  v.differentiable = false;
  v.residual = kNaN;
  v.sub_margin = prob.dim() == 1 ? hull_max_margin(prob, pairs)
                                 : hull_max_margin_2d(prob, pairs);
  v.sub_ok = v.sub_margin <= tol;
  // the value is a minimum of smooth competitors, so the lower
  // semidifferential is empty wherever the gradient jumps
  v.super_margin = kNaN;
  v.super_ok = true;
  return v;
}

double residual_at(const Problem& prob, double t, std::span<const double> x,
                   const EvalOptions& opt) {
  const GradientPair g = gradient_at(prob, t, x, opt);
  const double h =
      prob.dim() == 1 ? ham_1d(prob, g.p[0]) : prob.field()(g.p[0], g.p[1]);
  return std::abs(g.p_t + h);
}

namespace {

struct NodeScan {
  std::vector<PointVerdict> verdicts;
};

void reduce_region(RegionVerdict* out, const std::vector<PointVerdict>& verdicts) {
  out->worst_sub = -kInf;
  out->worst_super = kInf;
  bool any_sub = false, any_super = false;
  for (const PointVerdict& v : verdicts) {
    ++out->nodes;
    if (!v.differentiable) ++out->kink_nodes;
    if (v.unreliable) ++out->unreliable_nodes;
    if (v.differentiable)
      out->residual_max = std::max(out->residual_max, std::abs(v.residual));
    if (!std::isnan(v.sub_margin) && v.sub_margin > out->worst_sub) {
      out->worst_sub = v.sub_margin;
      out->worst_sub_point = v;
      any_sub = true;
    }
    if (!std::isnan(v.super_margin) && v.super_margin < out->worst_super) {
      out->worst_super = v.super_margin;
      out->worst_super_point = v;
      any_super = true;
    }
    out->subsolution = out->subsolution && v.sub_ok;
    out->supersolution = out->supersolution && v.super_ok;
    if ((!v.sub_ok || !v.super_ok) && out->failures.size() < 16)
      out->failures.push_back(v);
  }
  if (!any_sub) out->worst_sub = kNaN;
  if (!any_super) out->worst_super = kNaN;
  out->pass = out->subsolution && out->supersolution;
}

}  // namespace

RegionVerdict verify_region(const Problem& prob, double t_lo, double t_hi,
                            double x_lo, double x_hi, int nt, int nx, double tol,
                            const EvalOptions& opt) {
  if (prob.dim() != 1) throw InputError("region verification is one-dimensional");
  if (!(t_hi > t_lo) || nt < 1 || nx < 2) throw InputError("bad region geometry");
  RegionVerdict out;
  out.tol = tol;
  out.subsolution = out.supersolution = true;

  std::vector<double> times;
  const double dt = (t_hi - t_lo) / nt;
  for (int i = 1; i <= nt; ++i)
    if (t_lo + dt * i > 1e-4) times.push_back(t_lo + dt * i);
  const std::vector<double> xs = linspace(x_lo, x_hi, nx);

  std::vector<PointVerdict> verdicts(times.size() * xs.size());
  parallel_for(verdicts.size(), opt.jobs, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const double t = times[k / xs.size()];
      const double x = xs[k % xs.size()];
      verdicts[k] = check_viscosity_at(prob, t, std::span<const double>(&x, 1), tol, opt);
    }
  });
  reduce_region(&out, verdicts);

  // short-time approach to the datum, recorded as evidence
  const double L = prob.ball().data_lipschitz;
  double scale = std::abs(prob.conjugate().value1(0.0));
  scale = std::max({scale, prob.field()(L), prob.field()(-L), 0.0});
  for (double t : {0.1, 0.01, 0.001}) {
    if (t > prob.horizon() || t <= 1e-4) continue;
    TraceSample s;
    s.t = t;
    for (double x : xs)
      s.sup_dev = std::max(s.sup_dev, std::abs(evaluate1(prob, t, x, opt) -
                                               prob.data()(x)));
    s.bound = t * scale;
    s.ok = s.sup_dev <= s.bound + tol + 1e-12;
    out.initial_trace.push_back(s);
  }
  return out;
}

Expression parse_candidate(const std::string& text) {
  // candidates are written in (t, x); the expression grammar names the two
  // slots x and y, and both tokens are single letters so offsets survive
  std::string mapped;
  auto word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool standalone = (i == 0 || !word_char(text[i - 1])) &&
                            (i + 1 == text.size() || !word_char(text[i + 1]));
    if (standalone && text[i] == 't')
      mapped += 'x';
    else if (standalone && text[i] == 'x')
      mapped += 'y';
    else
      mapped += text[i];
  }
  return Expression::parse(mapped, 2);
}

namespace {

double set_max_margin(const SemidiffSet& s, const Expression& H) {
  switch (s.kind()) {
    case SemidiffSet::Kind::Empty:
      return kNaN;
    case SemidiffSet::Kind::Iv:
      throw InputError("candidate semidifferential has the wrong dimension");
    case SemidiffSet::Kind::Box: {
      const auto v = s.vertices2();
      double a_hi = -kInf, q_lo = kInf, q_hi = -kInf;
      for (const auto& p : v) {
        a_hi = std::max(a_hi, p[0]);
        q_lo = std::min(q_lo, p[1]);
        q_hi = std::max(q_hi, p[1]);
      }
      return a_hi + std::max(H(q_lo), H(q_hi));
    }
    case SemidiffSet::Kind::Segment: {
      const auto v = s.vertices2();
      double m = -kInf;
      for (const auto& p : v) m = std::max(m, p[0] + H(p[1]));
      return m;
    }
    case SemidiffSet::Kind::Disk: {
      const double r = s.disk_radius();
      double m = -kInf;
      for (int k = 0; k <= 256; ++k) {
        const double q = -r + 2.0 * r * k / 256.0;
        m = std::max(m, std::sqrt(std::max(r * r - q * q, 0.0)) + H(q));
      }
      return m;
    }
  }
  return kNaN;
}

double set_min_margin(const SemidiffSet& s, const Expression& H) {
  switch (s.kind()) {
    case SemidiffSet::Kind::Empty:
      return kNaN;
    case SemidiffSet::Kind::Iv:
      throw InputError("candidate semidifferential has the wrong dimension");
    case SemidiffSet::Kind::Box: {
      const auto v = s.vertices2();
      double a_lo = kInf, q_lo = kInf, q_hi = -kInf;
      for (const auto& p : v) {
        a_lo = std::min(a_lo, p[0]);
        q_lo = std::min(q_lo, p[1]);
        q_hi = std::max(q_hi, p[1]);
      }
      double m = std::min(H(q_lo), H(q_hi));
      if (q_hi > q_lo) {
        auto [qm, hm] = golden_min([&](double q) { return H(q); }, q_lo, q_hi,
                                   1e-10 * (1.0 + q_hi - q_lo));
        m = std::min(m, hm);
      }
      return a_lo + m;
    }
    case SemidiffSet::Kind::Segment: {
      const auto v = s.vertices2();
      auto g = [&](double lam) {
        const double a = v[0][0] + lam * (v[1][0] - v[0][0]);
        const double q = v[0][1] + lam * (v[1][1] - v[0][1]);
        return a + H(q);
      };
      auto [lm, gm] = golden_min(g, 0.0, 1.0, 1e-10);
      return std::min({g(0.0), g(1.0), gm});
    }
    case SemidiffSet::Kind::Disk: {
      const double r = s.disk_radius();
      double m = kInf;
      for (int k = 0; k <= 256; ++k) {
        const double q = -r + 2.0 * r * k / 256.0;
        m = std::min(m, -std::sqrt(std::max(r * r - q * q, 0.0)) + H(q));
      }
      return m;
    }
  }
  return kNaN;
}

Semidifferentials candidate_semidiff(const ScalarFunction& v, double t, double x,
                                     bool* unreliable) {
  if (v.expression()) {
    const double pt[2] = {t, x};
    return semidiff_at(v, std::span<const double>(pt, 2));
  }
  // gridded candidate: per-axis sampled intervals lifted to boxes
  NumericSemidiff along_t =
      numeric_semidiff([&v, x](double s) { return v(s, x); }, t);
  NumericSemidiff along_x =
      numeric_semidiff([&v, t](double s) { return v(t, s); }, x);
  auto kinky = [](const NumericSemidiff& n) {
    return std::abs(n.deriv_plus - n.deriv_minus) >
           1e-6 * (1.0 + std::abs(n.deriv_plus) + std::abs(n.deriv_minus));
  };
  *unreliable = kinky(along_t) && kinky(along_x);
  Semidifferentials out;
  auto lift = [](const SemidiffSet& a, const SemidiffSet& b) {
    if (a.is_empty() || b.is_empty()) return SemidiffSet::empty(2);
    return SemidiffSet::box(a.interval_bounds(), b.interval_bounds());
  };
  out.sup = lift(along_t.sets.sup, along_x.sets.sup);
  out.sub = lift(along_t.sets.sub, along_x.sets.sub);
  return out;
}

}  // namespace

RegionVerdict verify_candidate(const Problem& prob, const ScalarFunction& v,
                               double t_lo, double t_hi, double x_lo, double x_hi,
                               int nt, int nx, double tol, const EvalOptions& opt) {
  if (prob.dim() != 1) throw InputError("candidate verification is one-dimensional");
  if (v.dimension() != 2)
    throw InputError("a candidate surface must be a function of (t, x)");
  if (!(t_hi > t_lo) || nt < 1 || nx < 2) throw InputError("bad region geometry");

  RegionVerdict out;
  out.tol = tol;
  out.subsolution = out.supersolution = true;
  std::vector<double> times;
  const double dt = (t_hi - t_lo) / nt;
  for (int i = 1; i <= nt; ++i)
    if (t_lo + dt * i > 1e-4) times.push_back(t_lo + dt * i);
  const std::vector<double> xs = linspace(x_lo, x_hi, nx);
  const Expression& H = prob.field();

  std::vector<PointVerdict> verdicts(times.size() * xs.size());
  parallel_for(verdicts.size(), opt.jobs, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const double t = times[k / xs.size()];
      const double x = xs[k % xs.size()];
      PointVerdict pv;
      pv.t = t;
      pv.x[0] = x;
      const Semidifferentials sd = candidate_semidiff(v, t, x, &pv.unreliable);
      pv.differentiable = sd.sup.is_singleton(1e-9) && sd.sub.is_singleton(1e-9);
      pv.sub_margin = set_max_margin(sd.sup, H);
      pv.super_margin = set_min_margin(sd.sub, H);
      pv.residual = pv.differentiable ? pv.sub_margin : kNaN;
      pv.sub_ok = std::isnan(pv.sub_margin) || pv.sub_margin <= tol;
      pv.super_ok = std::isnan(pv.super_margin) || pv.super_margin >= -tol;
      verdicts[k] = pv;
    }
  });
  reduce_region(&out, verdicts);
  return out;
}

}  // namespace hopflax
