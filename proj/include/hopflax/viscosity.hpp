#pragma once

#include <span>
#include <string>
#include <vector>

#include "hopflax/hopflax.hpp"
#include "hopflax/problem.hpp"

namespace hopflax {

// Signed equation margins at one point.  Subsolution side: largest
// p_t + H(p_x) over the upper semidifferential (pass when <= tol).
// Supersolution side: smallest over the lower one (pass when >= -tol).
// Empty sets pass vacuously with a NaN margin.
struct PointVerdict {
  double t = 0.0;
  std::array<double, 2> x{};
  bool differentiable = false;
  bool sub_ok = true, super_ok = true;
  double sub_margin = 0.0, super_margin = 0.0;
  double residual = 0.0;  // p_t + H(p) at differentiable points, else NaN
  bool unreliable = false;  // sampled joint semidifferential, both axes kinked
};

PointVerdict check_viscosity_at(const Problem& prob, double t,
                                std::span<const double> x, double tol = 1e-8,
                                const EvalOptions& opt = {});

// |p_t + H(p_x)| at a differentiable point (NondifferentiableError otherwise).
double residual_at(const Problem& prob, double t, std::span<const double> x,
                   const EvalOptions& opt = {});

struct TraceSample {
  double t = 0.0;
  double sup_dev = 0.0;  // max |u(t,x) - datum(x)| over the x nodes
  double bound = 0.0;    // t * worst conjugate/Hamiltonian scale
  bool ok = false;
};

struct RegionVerdict {
  bool subsolution = false, supersolution = false, pass = false;
  double tol = 0.0;
  double worst_sub = 0.0, worst_super = 0.0;  // extreme signed margins
  PointVerdict worst_sub_point, worst_super_point;
  double residual_max = 0.0;  // over differentiable nodes
  std::size_t nodes = 0, kink_nodes = 0, unreliable_nodes = 0;
  std::vector<PointVerdict> failures;     // capped
  std::vector<TraceSample> initial_trace;  // solution path only
};

// Checks both inequalities on an (nt x nx) scan of (t_lo, t_hi] x [x_lo, x_hi]
// and records how the short-time values approach the datum.
RegionVerdict verify_region(const Problem& prob, double t_lo, double t_hi,
                            double x_lo, double x_hi, int nt = 17, int nx = 129,
                            double tol = 1e-8, const EvalOptions& opt = {});

// Candidate expressions are written in the natural variables t and x,
// e.g. "abs(x) - 0.5*t".
Expression parse_candidate(const std::string& text);

// Same scan for an arbitrary candidate surface v(t, x): closed-form
// candidates get exact semidifferentials, gridded ones sampled per-axis
// intervals lifted to boxes (flagged unreliable when both axes carry kinks).
RegionVerdict verify_candidate(const Problem& prob, const ScalarFunction& v,
                               double t_lo, double t_hi, double x_lo, double x_hi,
                               int nt = 17, int nx = 129, double tol = 1e-8,
                               const EvalOptions& opt = {});

}  // namespace hopflax
