#include "hopflax/scalar_function.hpp"

#include <algorithm>
#include <cmath>

#include "hopflax/util.hpp"

namespace hopflax {

ScalarFunction ScalarFunction::from_expression(Expression e) {
  if (e.empty()) throw InputError("empty expression");
  ScalarFunction f;
  f.repr_ = Repr::Expression;
  f.dim_ = e.dimension();
  f.expr_ = std::move(e);
  return f;
}

ScalarFunction ScalarFunction::piecewise(Expression e, std::vector<double> breakpoints) {
  if (e.dimension() != 1) throw InputError("piecewise representation is 1-D");
  ScalarFunction f = from_expression(std::move(e));
  f.repr_ = Repr::Piecewise;
  std::sort(breakpoints.begin(), breakpoints.end());
  f.breakpoints_ = std::move(breakpoints);
  return f;
}

ScalarFunction ScalarFunction::grid1(double x0, double dx, std::vector<double> values) {
  if (values.size() < 2 || !(dx > 0)) throw InputError("grid needs >= 2 nodes and dx > 0");
  ScalarFunction f;
  f.repr_ = Repr::Grid;
  f.dim_ = 1;
  f.x0_ = x0;
  f.dx_ = dx;
  f.nx_ = static_cast<int>(values.size());
  f.values_ = std::move(values);
  return f;
}

ScalarFunction ScalarFunction::grid2(double x0, double y0, double dx, double dy,
                                     int nx, int ny, std::vector<double> values) {
  if (nx < 2 || ny < 2 || !(dx > 0) || !(dy > 0) ||
      values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
    throw InputError("malformed 2-D grid");
  ScalarFunction f;
  f.repr_ = Repr::Grid;
  f.dim_ = 2;
  f.x0_ = x0;
  f.y0_ = y0;
  f.dx_ = dx;
  f.dy_ = dy;
  f.nx_ = nx;
  f.ny_ = ny;
  f.values_ = std::move(values);
  return f;
}

namespace {

// clamped segment index for linear interpolation/extrapolation
inline int seg_index(double x, double x0, double dx, int n) {
  int i = static_cast<int>(std::floor((x - x0) / dx));
  return std::clamp(i, 0, n - 2);
}

}  // namespace

double ScalarFunction::value(std::span<const double> pt) const {
  if (empty()) throw InputError("empty function");
  if (static_cast<int>(pt.size()) != dim_) throw InputError("dimension mismatch");
  if (repr_ != Repr::Grid) return expr_.eval(pt);
  if (dim_ == 1) {
    const int i = seg_index(pt[0], x0_, dx_, nx_);
    const double s = (pt[0] - (x0_ + i * dx_)) / dx_;
    return values_[static_cast<std::size_t>(i)] * (1.0 - s) +
           values_[static_cast<std::size_t>(i + 1)] * s;
  }
  const int i = seg_index(pt[0], x0_, dx_, nx_);
  const int j = seg_index(pt[1], y0_, dy_, ny_);
  const double sx = (pt[0] - (x0_ + i * dx_)) / dx_;
  const double sy = (pt[1] - (y0_ + j * dy_)) / dy_;
  auto at = [&](int a, int b) {
    return values_[static_cast<std::size_t>(b) * static_cast<std::size_t>(nx_) +
                   static_cast<std::size_t>(a)];
  };
  return at(i, j) * (1 - sx) * (1 - sy) + at(i + 1, j) * sx * (1 - sy) +
         at(i, j + 1) * (1 - sx) * sy + at(i + 1, j + 1) * sx * sy;
}

double ScalarFunction::deriv_one_sided(std::span<const double> pt, int axis, int side) const {
  if (empty()) throw InputError("empty function");
  if (repr_ != Repr::Grid) return expr_.deriv(pt, axis, side);
  if (dim_ != 1 || axis != 0) throw InputError("grid derivatives are 1-D");
  const double x = pt[0];
  // node hit: take the segment on the requested side
  const double u = (x - x0_) / dx_;
  const double r = std::round(u);
  int i;
  if (std::abs(u - r) <= 1e-9 && r >= 0 && r <= nx_ - 1) {
    i = static_cast<int>(r) + (side < 0 ? -1 : 0);
    i = std::clamp(i, 0, nx_ - 2);
  } else {
    i = seg_index(x, x0_, dx_, nx_);
  }
  return (values_[static_cast<std::size_t>(i + 1)] - values_[static_cast<std::size_t>(i)]) / dx_;
}

std::vector<double> ScalarFunction::kinks(double lo, double hi) const {
  if (dim_ != 1) throw InputError("kink extraction is 1-D");
  std::vector<double> out;
  if (repr_ == Repr::Piecewise) {
    for (double b : breakpoints_)
      if (b >= lo && b <= hi) out.push_back(b);
    return out;
  }
  if (repr_ == Repr::Grid) {
    for (int i = 1; i + 1 < nx_; ++i) {
      const double x = x0_ + i * dx_;
      if (x < lo || x > hi) continue;
      const double dl = (values_[static_cast<std::size_t>(i)] - values_[static_cast<std::size_t>(i - 1)]) / dx_;
      const double dr = (values_[static_cast<std::size_t>(i + 1)] - values_[static_cast<std::size_t>(i)]) / dx_;
      if (std::abs(dr - dl) > 1e-6 * (1.0 + std::max(std::abs(dl), std::abs(dr))))
        out.push_back(x);
    }
    return out;
  }
  for (double c : expr_.kink_candidates(lo, hi)) {
    const double dl = expr_.deriv1(c, -1);
    const double dr = expr_.deriv1(c, +1);
    const bool bad = !std::isfinite(dl) || !std::isfinite(dr);
    if (bad || std::abs(dr - dl) > 1e-9 * (1.0 + std::max(std::abs(dl), std::abs(dr))))
      out.push_back(c);
  }
  return out;
}

double ScalarFunction::lipschitz(double lo, double hi) const {
  if (lipschitz_bound_) return *lipschitz_bound_;
  if (!(hi > lo)) throw InputError("empty window");
  double best = 0.0;
  if (repr_ == Repr::Grid && dim_ == 1) {
    for (int i = 0; i + 1 < nx_; ++i)
      best = std::max(best, std::abs(values_[static_cast<std::size_t>(i + 1)] -
                                     values_[static_cast<std::size_t>(i)]) / dx_);
    return best;
  }
  const int n = 4096;
  const double step = (hi - lo) / n;
  if (dim_ == 1) {
    for (int i = 0; i <= n; ++i) {
      const double x = lo + step * i;
      best = std::max({best, std::abs(expr_.deriv1(x, +1)), std::abs(expr_.deriv1(x, -1))});
    }
    for (double k : kinks(lo, hi))
      best = std::max({best, std::abs(expr_.deriv1(k, +1)), std::abs(expr_.deriv1(k, -1))});
    return best;
  }
  // 2-D: gradient norm over a coarse lattice of the square window
  const int m = 128;
  const double s2 = (hi - lo) / m;
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= m; ++i) {
      const double pt[2] = {lo + s2 * i, lo + s2 * j};
      const std::span<const double> sp(pt, 2);
      double g = 0.0;
      for (int axis = 0; axis < 2; ++axis)
        for (int side : {-1, +1})
          g = std::max(g, std::abs(expr_.deriv(sp, axis, side)));
      best = std::max(best, g * std::sqrt(2.0));
    }
  return best;
}

}  // namespace hopflax
