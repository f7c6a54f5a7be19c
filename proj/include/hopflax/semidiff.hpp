#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "hopflax/scalar_function.hpp"

namespace hopflax {

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// One of D+ f(y) / D- f(y) in the shapes the supported inputs produce:
//   1-D: a closed interval (possibly a point) or empty;
//   2-D: a box (coordinate sums), a radial segment, or a disk about 0
//        (radial data at the center). Disks are not polytopes, so vertex
//        queries on them are refused.
class SemidiffSet {
 public:
  enum class Kind { Empty, Iv, Box, Segment, Disk };

  static SemidiffSet empty(int dim);
  static SemidiffSet interval(double lo, double hi);
  static SemidiffSet box(Interval a, Interval b);
  static SemidiffSet segment(std::array<double, 2> a, std::array<double, 2> b);
  static SemidiffSet disk(double radius);

  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }
  bool is_empty() const { return kind_ == Kind::Empty; }
  bool is_singleton(double tol = 1e-12) const;
  bool contains(std::span<const double> q, double tol) const;
  Interval interval_bounds() const;  // 1-D
  // extreme points for the polytope kinds; throws for disks
  std::vector<std::array<double, 2>> vertices2() const;
  double disk_radius() const { return radius_; }

 private:
  Kind kind_ = Kind::Empty;
  int dim_ = 1;
  Interval iv_{};
  Interval box_[2]{};
  std::array<double, 2> seg_a_{}, seg_b_{};
  double radius_ = 0.0;
};

struct Semidifferentials {
  SemidiffSet sup;  // D+
  SemidiffSet sub;  // D-
};

// D# = D+ ∪ D- when nonempty, else {0}
struct DSharpSet {
  SemidiffSet sup, sub;
  bool zero_fallback = false;
  int dim = 1;
  bool contains(std::span<const double> q, double tol) const;
};

// Exact semidifferentials from one-sided derivatives. 1-D directly; 2-D via
// the coordinate-sum and radial lifts, otherwise an unsupported-input error.
Semidifferentials semidiff_at(const ScalarFunction& f, std::span<const double> y);
DSharpSet d_sharp(const ScalarFunction& f, std::span<const double> y);

// Sampled variant from one-sided difference quotients over a shrinking step
// sequence; declares sets empty when the quotients fail to settle.
struct NumericSemidiff {
  Semidifferentials sets;
  double smallest_step = 0.0;
  bool left_converged = false, right_converged = false;
  double deriv_minus = 0.0, deriv_plus = 0.0;  // meaningful when converged
};
NumericSemidiff numeric_semidiff(const std::function<double(double)>& f, double y,
                                 std::span<const double> steps = {},
                                 double tol = 1e-3);

}  // namespace hopflax
