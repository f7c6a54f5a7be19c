#include "hopflax/semidiff.hpp"

#include <algorithm>
#include <cmath>

#include "hopflax/util.hpp"

namespace hopflax {

SemidiffSet SemidiffSet::empty(int dim) {
  SemidiffSet s;
  s.kind_ = Kind::Empty;
  s.dim_ = dim;
  return s;
}

SemidiffSet SemidiffSet::interval(double lo, double hi) {
  SemidiffSet s;
  s.kind_ = Kind::Iv;
  s.dim_ = 1;
  s.iv_ = {std::min(lo, hi), std::max(lo, hi)};
  return s;
}

SemidiffSet SemidiffSet::box(Interval a, Interval b) {
  SemidiffSet s;
  s.kind_ = Kind::Box;
  s.dim_ = 2;
  s.box_[0] = a;
  s.box_[1] = b;
  return s;
}

SemidiffSet SemidiffSet::segment(std::array<double, 2> a, std::array<double, 2> b) {
  SemidiffSet s;
  s.kind_ = Kind::Segment;
  s.dim_ = 2;
  s.seg_a_ = a;
  s.seg_b_ = b;
  return s;
}

SemidiffSet SemidiffSet::disk(double radius) {
  SemidiffSet s;
  s.kind_ = Kind::Disk;
  s.dim_ = 2;
  s.radius_ = std::max(0.0, radius);
  return s;
}

bool SemidiffSet::is_singleton(double tol) const {
  switch (kind_) {
    case Kind::Empty: return false;
    case Kind::Iv: return iv_.hi - iv_.lo <= tol;
    case Kind::Box:
      return box_[0].hi - box_[0].lo <= tol && box_[1].hi - box_[1].lo <= tol;
    case Kind::Segment:
      return std::abs(seg_a_[0] - seg_b_[0]) + std::abs(seg_a_[1] - seg_b_[1]) <= tol;
    case Kind::Disk: return radius_ <= tol;
  }
  return false;
}

bool SemidiffSet::contains(std::span<const double> q, double tol) const {
  if (static_cast<int>(q.size()) != dim_) throw InputError("dimension mismatch");
  switch (kind_) {
    case Kind::Empty: return false;
    case Kind::Iv: return q[0] >= iv_.lo - tol && q[0] <= iv_.hi + tol;
    case Kind::Box:
      return q[0] >= box_[0].lo - tol && q[0] <= box_[0].hi + tol &&
             q[1] >= box_[1].lo - tol && q[1] <= box_[1].hi + tol;
    case Kind::Segment: {
      const double dx = seg_b_[0] - seg_a_[0], dy = seg_b_[1] - seg_a_[1];
      const double len2 = dx * dx + dy * dy;
      double t = 0.0;
      if (len2 > 0) t = std::clamp(((q[0] - seg_a_[0]) * dx + (q[1] - seg_a_[1]) * dy) / len2, 0.0, 1.0);
      const double px = seg_a_[0] + t * dx, py = seg_a_[1] + t * dy;
      return std::hypot(q[0] - px, q[1] - py) <= tol;
    }
    case Kind::Disk: return std::hypot(q[0], q[1]) <= radius_ + tol;
  }
  return false;
}

Interval SemidiffSet::interval_bounds() const {
  if (dim_ != 1 || kind_ != Kind::Iv) throw InputError("not a 1-D interval set");
  return iv_;
}

std::vector<std::array<double, 2>> SemidiffSet::vertices2() const {
  switch (kind_) {
    case Kind::Empty: return {};
    case Kind::Iv: throw InputError("1-D set has no 2-D vertices");
    case Kind::Box:
      return {{box_[0].lo, box_[1].lo}, {box_[0].hi, box_[1].lo},
              {box_[0].hi, box_[1].hi}, {box_[0].lo, box_[1].hi}};
    case Kind::Segment: return {seg_a_, seg_b_};
    case Kind::Disk:
      throw InputError("disk semidifferential is not a polytope; use disk_radius");
  }
  return {};
}

bool DSharpSet::contains(std::span<const double> q, double tol) const {
  if (zero_fallback) {
    double norm = 0.0;
    for (double c : q) norm += c * c;
    return std::sqrt(norm) <= tol;
  }
  return (!sup.is_empty() && sup.contains(q, tol)) ||
         (!sub.is_empty() && sub.contains(q, tol));
}

namespace {

constexpr double kDerivTol = 1e-9;

// 1-D dichotomy: a concave corner carries D+ = [f'+, f'-] and empty D-,
// a convex corner the mirror image, matching derivatives give both
Semidifferentials from_sides_1d(double dm, double dp) {
  Semidifferentials out;
  const double tol = kDerivTol * (1.0 + std::max(std::abs(dm), std::abs(dp)));
  if (!std::isfinite(dm) || !std::isfinite(dp)) {
    out.sup = SemidiffSet::empty(1);
    out.sub = SemidiffSet::empty(1);
    return out;
  }
  if (std::abs(dm - dp) <= tol) {
    out.sup = SemidiffSet::interval(dp, dp);
    out.sub = SemidiffSet::interval(dp, dp);
  } else if (dm > dp) {
    out.sup = SemidiffSet::interval(dp, dm);
    out.sub = SemidiffSet::empty(1);
  } else {
    out.sup = SemidiffSet::empty(1);
    out.sub = SemidiffSet::interval(dm, dp);
  }
  return out;
}

Interval iv_of(const SemidiffSet& s) { return s.interval_bounds(); }

}  // namespace

Semidifferentials semidiff_at(const ScalarFunction& f, std::span<const double> y) {
  if (f.empty()) throw InputError("empty function");
  if (static_cast<int>(y.size()) != f.dimension()) throw InputError("dimension mismatch");

  if (f.dimension() == 1) {
    const double dm = f.deriv_one_sided(y, 0, -1);
    const double dp = f.deriv_one_sided(y, 0, +1);
    return from_sides_1d(dm, dp);
  }

  const Expression* e = f.expression();
  if (!e) throw InputError("2-D semidifferentials need a closed-form representation");

  std::vector<Expression> parts;
  if (e->separable_parts(&parts)) {
    Semidifferentials a = semidiff_at(ScalarFunction::from_expression(parts[0]),
                                      std::span<const double>(&y[0], 1));
    Semidifferentials b = semidiff_at(ScalarFunction::from_expression(parts[1]),
                                      std::span<const double>(&y[1], 1));
    Semidifferentials out;
    out.sup = (!a.sup.is_empty() && !b.sup.is_empty())
                  ? SemidiffSet::box(iv_of(a.sup), iv_of(b.sup))
                  : SemidiffSet::empty(2);
    out.sub = (!a.sub.is_empty() && !b.sub.is_empty())
                  ? SemidiffSet::box(iv_of(a.sub), iv_of(b.sub))
                  : SemidiffSet::empty(2);
    return out;
  }

  Expression profile;
  if (e->radial_profile(&profile)) {
    const double r = std::hypot(y[0], y[1]);
    Semidifferentials out;
    if (r > 1e-12) {
      const double ux = y[0] / r, uy = y[1] / r;
      const double dm = profile.deriv1(r, -1);
      const double dp = profile.deriv1(r, +1);
      const Semidifferentials lifted = from_sides_1d(dm, dp);
      auto to_segment = [&](const SemidiffSet& s) {
        if (s.is_empty()) return SemidiffSet::empty(2);
        const Interval iv = s.interval_bounds();
        return SemidiffSet::segment({iv.lo * ux, iv.lo * uy}, {iv.hi * ux, iv.hi * uy});
      };
      out.sup = to_segment(lifted.sup);
      out.sub = to_segment(lifted.sub);
      return out;
    }
    // center: D+ is the disk of radius -g'(0+) when that slope is <= 0,
    // D- the disk of radius g'(0+) when it is >= 0
    const double d0 = profile.deriv1(0.0, +1);
    out.sup = d0 <= kDerivTol ? SemidiffSet::disk(-d0) : SemidiffSet::empty(2);
    out.sub = d0 >= -kDerivTol ? SemidiffSet::disk(d0) : SemidiffSet::empty(2);
    return out;
  }

  // plain smooth point: per-axis one-sided derivatives must agree
  double g[2];
  for (int a = 0; a < 2; ++a) {
    const double dm = e->deriv(y, a, -1);
    const double dp = e->deriv(y, a, +1);
    if (!std::isfinite(dm) || !std::isfinite(dp) ||
        std::abs(dm - dp) > kDerivTol * (1.0 + std::max(std::abs(dm), std::abs(dp))))
      throw InputError(
          "unsupported 2-D shape: semidifferentials need a coordinate sum, a radial g(|x|), or a smooth point");
    g[a] = dp;
  }
  Semidifferentials out;
  out.sup = SemidiffSet::box({g[0], g[0]}, {g[1], g[1]});
  out.sub = out.sup;
  return out;
}

DSharpSet d_sharp(const ScalarFunction& f, std::span<const double> y) {
  const Semidifferentials s = semidiff_at(f, y);
  DSharpSet out;
  out.sup = s.sup;
  out.sub = s.sub;
  out.dim = f.dimension();
  out.zero_fallback = s.sup.is_empty() && s.sub.is_empty();
  return out;
}

NumericSemidiff numeric_semidiff(const std::function<double(double)>& f, double y,
                                 std::span<const double> steps, double tol) {
  std::vector<double> hs(steps.begin(), steps.end());
  if (hs.empty()) {
    double h = 1e-2;
    for (int k = 0; k < 18; ++k, h *= 0.5) hs.push_back(h);
  }
  std::sort(hs.begin(), hs.end(), std::greater<double>());
  const double f0 = f(y);

  std::vector<double> right, left;
  right.reserve(hs.size());
  left.reserve(hs.size());
  for (double h : hs) {
    right.push_back((f(y + h) - f0) / h);
    left.push_back((f0 - f(y - h)) / h);
  }

  NumericSemidiff out;
  out.smallest_step = hs.back();

  auto settle = [&](const std::vector<double>& q, bool* conv) {
    const std::size_t n = q.size();
    const std::size_t tail = std::min<std::size_t>(3, n);
    double mx = q[n - 1], mn = q[n - 1];
    for (std::size_t i = n - tail; i < n; ++i) {
      mx = std::max(mx, q[i]);
      mn = std::min(mn, q[i]);
    }
    const double spread = mx - mn;
    *conv = std::isfinite(spread) && spread <= tol * (1.0 + std::abs(q[n - 1]));
    // Richardson pair: cancels the O(h) curvature term when it converges
    return n >= 2 ? 2.0 * q[n - 1] - q[n - 2] : q[n - 1];
  };
  out.deriv_plus = settle(right, &out.right_converged);
  out.deriv_minus = settle(left, &out.left_converged);

  if (out.left_converged && out.right_converged) {
    out.sets = from_sides_1d(out.deriv_minus, out.deriv_plus);
    // widen the equality tolerance to the sampling tolerance
    const double dm = out.deriv_minus, dp = out.deriv_plus;
    if (std::abs(dm - dp) <= tol * (1.0 + std::max(std::abs(dm), std::abs(dp)))) {
      const double d = 0.5 * (dm + dp);
      out.sets.sup = SemidiffSet::interval(d, d);
      out.sets.sub = SemidiffSet::interval(d, d);
    }
  } else {
    out.sets.sup = SemidiffSet::empty(1);
    out.sets.sub = SemidiffSet::empty(1);
  }
  return out;
}

}  // namespace hopflax
