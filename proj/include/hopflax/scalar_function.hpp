#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hopflax/expression.hpp"

namespace hopflax {

// A real-valued function of 1 or 2 variables in one of three representations:
//   Expression — closed-form, exact values and one-sided derivatives;
//   Piecewise  — an expression plus its authoritative kink list;
//   Grid       — uniform samples, linear interpolation in between
//                (bilinear for 2-D), optionally carrying the argmax map
//                produced by the conjugate transform.
class ScalarFunction {
 public:
  enum class Repr { Expression, Piecewise, Grid };

  ScalarFunction() = default;
  static ScalarFunction from_expression(Expression e);
  static ScalarFunction piecewise(Expression e, std::vector<double> breakpoints);
  static ScalarFunction grid1(double x0, double dx, std::vector<double> values);
  static ScalarFunction grid2(double x0, double y0, double dx, double dy,
                              int nx, int ny, std::vector<double> values);

  Repr repr() const { return repr_; }
  int dimension() const { return dim_; }
  bool empty() const { return dim_ == 0; }

  double value(std::span<const double> pt) const;
  double operator()(double x) const { return value(std::span<const double>(&x, 1)); }
  double operator()(double x, double y) const {
    const double pt[2] = {x, y};
    return value(std::span<const double>(pt, 2));
  }

  double deriv_one_sided(std::span<const double> pt, int axis, int side) const;
  double deriv1(double x, int side) const {
    return deriv_one_sided(std::span<const double>(&x, 1), 0, side);
  }

  // Verified kink abscissae in [lo, hi] (1-D): candidates from the expression
  // structure (or the stored breakpoint list / grid slope jumps), kept when
  // the one-sided derivatives actually disagree.
  std::vector<double> kinks(double lo, double hi) const;

  // Lipschitz bound on [lo, hi]: the user-supplied constant when set,
  // otherwise the sampled maximum of |one-sided derivative|.
  double lipschitz(double lo, double hi) const;
  void set_lipschitz(double bound) { lipschitz_bound_ = bound; }
  std::optional<double> lipschitz_bound() const { return lipschitz_bound_; }

  const Expression* expression() const {
    return repr_ == Repr::Grid ? nullptr : &expr_;
  }

  // grid accessors (valid for Repr::Grid)
  double grid_x0(int axis) const { return axis == 0 ? x0_ : y0_; }
  double grid_dx(int axis) const { return axis == 0 ? dx_ : dy_; }
  int grid_n(int axis) const { return axis == 0 ? nx_ : ny_; }
  const std::vector<double>& grid_values() const { return values_; }
  bool has_argmax() const { return !argmax_.empty(); }
  const std::vector<double>& argmax() const { return argmax_; }
  std::vector<double>& mutable_argmax() { return argmax_; }

 private:
  Repr repr_ = Repr::Expression;
  int dim_ = 0;
  Expression expr_;
  std::vector<double> breakpoints_;
  double x0_ = 0, y0_ = 0, dx_ = 1, dy_ = 1;
  int nx_ = 0, ny_ = 0;
  std::vector<double> values_;
  std::vector<double> argmax_;  // per grid node; 2-D stores pairs interleaved
  std::optional<double> lipschitz_bound_;
};

}  // namespace hopflax
