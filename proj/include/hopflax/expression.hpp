#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hopflax {

// Closed expression grammar over one or two variables:
//   numbers, variables (x|p -> coordinate 0, y|q -> coordinate 1),
//   neg, abs, sin, cos, sqrt, + - * / , ^ with constant exponent,
//   n-ary min/max, and 1-D piecewise(e0 | b1 | e1 | ... | bk | ek)
//   with strictly increasing constant breakpoints b1 < ... < bk.
//
// Trees are stored flat in postorder (children precede parents), which makes
// evaluation a single forward pass and keeps the type cheap to copy.
class Expression {
 public:
  enum class Op : std::uint8_t {
    Num, Var, Neg, Abs, Sin, Cos, Sqrt,
    Add, Sub, Mul, Div, Pow, Min, Max, Piecewise
  };

  struct Node {
    Op op = Op::Num;
    double num = 0.0;              // Num: value; Pow: exponent
    bool int_exponent = false;     // Pow: exponent is integral
    int var = 0;                   // Var: coordinate index
    std::vector<int> kids;
    std::vector<double> consts;    // Piecewise: breakpoints
  };

  Expression() = default;

  // Throws ParseError with a byte offset on malformed input.
  static Expression parse(std::string_view text, int dimension);
  static Expression constant(double v);

  bool empty() const { return nodes_.empty(); }
  int dimension() const { return dim_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  double eval(std::span<const double> pt) const;
  double operator()(double x) const { return eval(std::span<const double>(&x, 1)); }
  double operator()(double x, double y) const {
    const double pt[2] = {x, y};
    return eval(std::span<const double>(pt, 2));
  }

  // One-sided derivative along `axis`; side = +1 right, -1 left.
  // Exact at kinks of abs/min/max/piecewise (tie tolerance 1e-12).
  double deriv(std::span<const double> pt, int axis, int side) const;
  double deriv1(double x, int side) const {
    return deriv(std::span<const double>(&x, 1), 0, side);
  }

  // Parseable text form; print(parse(print(e))) == print(e).
  std::string str() const;

  // True (with *out set) when the tree folds to a constant.
  bool constant_value(double* out) const;

  // Candidate kink abscissae of a 1-D expression inside [lo, hi]: zero
  // crossings under abs, branch crossings under min/max, piecewise
  // breakpoints. Bisection-polished; callers verify by derivative mismatch.
  std::vector<double> kink_candidates(double lo, double hi, int scan = 4096) const;

  // dim-2 probes used by the semidifferential and conjugate lifts.
  // f(x0,x1) = parts[0](x0) + parts[1](x1) (constants folded into parts[0]).
  bool separable_parts(std::vector<Expression>* parts) const;
  // f(x) = profile(|x|) with |x| spelled sqrt(x*x+y*y) or sqrt(x^2+y^2).
  bool radial_profile(Expression* profile) const;

  // Rebuild helpers (used by the probes and by tests).
  static Expression negate(const Expression& e);
  static Expression sum(const Expression& a, const Expression& b);

 private:
  friend class ExprParser;
  std::vector<Node> nodes_;
  int dim_ = 1;
  bool pq_names_ = false;  // print variables as p/q instead of x/y

  int append_subtree(const Expression& src, int src_root, int var_remap);
};

}  // namespace hopflax
