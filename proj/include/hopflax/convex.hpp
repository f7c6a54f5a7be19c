#pragma once

#include <array>
#include <span>
#include <vector>

#include "hopflax/scalar_function.hpp"

namespace hopflax {

struct SemiconcavityEstimate {
  double constant = 0.0;  // smallest admissible C over the sampled pairs
  bool infinite = false;  // required C diverges as the pair gap shrinks
};

struct ConvexityReport {
  bool convex = false;
  bool strictly_convex = false;
  bool superlinear = false;        // windowed growth heuristic
  double uniform_convexity = 0.0;  // largest Lambda with f - Lambda|y|^2 convex
  SemiconcavityEstimate semiconcavity;
  bool has_witness = false;
  std::array<double, 3> witness{};  // (y1, midpoint, y2) violating midpoint convexity
};

// Exact conjugate values f*(z) = max_p {<z,p> - f(p)} and maximizers for a
// convex coercive Hamiltonian given in closed form.
//
// 1-D: the maximizer solves f'(p) = z; f' is nondecreasing, so a bracketed
// bisection pins p* to machine precision (jumps of f' land on the kink).
// 2-D: separable sums split into two 1-D problems; anything else gets a
// cached coarse argmax grid refined per query by coordinate ascent.
class ConjugateOracle {
 public:
  explicit ConjugateOracle(Expression H);

  int dimension() const { return H_.dimension(); }
  const Expression& hamiltonian() const { return H_; }

  double h_value(std::span<const double> p) const { return H_.eval(p); }
  // gradient of H itself (one-sided from the right at kinks)
  void h_grad(std::span<const double> p, double* out) const;

  void value_grad1(double z, double* val, double* arg) const;
  void value_grad2(const double z[2], double* val, double arg[2]) const;
  double value1(double z) const {
    double v, a;
    value_grad1(z, &v, &a);
    return v;
  }

  // linear-time monotone-argmax sweep on an ascending uniform z-grid;
  // grid-accurate (callers polish with value_grad1 where it matters)
  void sweep1(double z0, double dz, int n, std::vector<double>* vals,
              std::vector<double>* args) const;

  // max |H_p| over the coordinate box |q_i| <= L (exact in 1-D / separable)
  double velocity_bound(double L) const;

  bool separable() const { return dim_ != 2 || separable_; }

 private:
  Expression H_;
  int dim_;
  bool separable_ = false;
  Expression part_[2];           // separable pieces
  // non-separable 2-D: coarse dual-window argmax cache
  double cz0_[2] = {0, 0}, cdz_[2] = {1, 1};
  int cn_[2] = {0, 0};
  std::vector<double> cache_arg_;  // interleaved pairs

  double solve_primal(const Expression& h, double z) const;  // root of h' = z
  void build_cache();
};

// Grid Fenchel transform: f*(z) on the dual window with the argmax map stored
// in the result's payload. Works for expression and grid representations.
ScalarFunction fenchel_conjugate(const ScalarFunction& f, double dual_lo,
                                 double dual_hi, int dual_resolution);

// Maximizer read off a transform result's argmax map (linear interpolation
// between dual nodes); z must lie inside the dual window.
double conjugate_gradient(const ScalarFunction& conj, double z);

// Largest Lambda >= 0 with v - Lambda|y|^2 midpoint-convex on sampled pairs.
double estimate_uniform_convexity(const ScalarFunction& f, double lo, double hi,
                                  int resolution = 1025, double tol = 1e-6);

// Smallest C >= 0 with the semiconcavity midpoint inequality on sampled
// pairs; flags divergence (corner from below) instead of returning a number.
SemiconcavityEstimate estimate_semiconcavity(const ScalarFunction& f, double lo,
                                             double hi, int resolution = 1025,
                                             double tol = 1e-6);

ConvexityReport analyze_convexity(const ScalarFunction& f, double lo, double hi,
                                  int resolution = 1025);

}  // namespace hopflax
