#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hopflax/hopflax.hpp"
#include "hopflax/problem.hpp"

namespace hopflax {

// Inputs of the differentiability-strip estimate: theta bounds the uniform
// convexity of the conjugate on the relevant slope window, B the
// semiconvexity defect of the datum (semiconcavity constant of its negation),
// T the horizon. gamma, when set, fixes the convexity floor instead of the
// per-time optimum 1/t0.
struct RegularityParams {
  double theta = 0.0;
  double B = 0.0;
  double T = 0.0;
  std::optional<double> gamma;
};

// Singleton minimizer cluster away from the boundary regime.
std::pair<bool, MinimizerSet> is_differentiable_at(const Problem& prob, double t,
                                                   std::span<const double> x,
                                                   const EvalOptions& opt = {});

struct StripReport {
  std::vector<double> times;     // scanned planes, ascending, t_lo exclusive
  std::vector<char> plane_ok;    // every x node differentiable
  double t_star_numeric = 0.0;   // top of the passing prefix (0 if none)
  double t_star_bound = 0.0;     // min(T, theta/B), 0 when B diverges
  bool bound_applicable = false;
  RegularityParams params;
  struct Failure {
    double t = 0.0, x = 0.0;
  };
  std::vector<Failure> failures;  // first offending nodes, capped
};

// Scans nt planes over (t_lo, t_hi] at nx abscissae each and reports the
// largest prefix of fully differentiable planes next to the analytic bound.
StripReport differentiability_strip(const Problem& prob, double t_lo, double t_hi,
                                    double x_lo, double x_hi, int nt = 32,
                                    int nx = 513, const EvalOptions& opt = {});

struct SemiconvexityBound {
  double t_star = 0.0;  // strip height min(T, theta/B); 0 when B diverges
  double theta = 0.0;
  double B = 0.0;
  bool applicable = false;  // finite B
  std::optional<double> gamma;

  // semiconvexity constant of the solution at time t0 inside the strip
  double constant_at(double t0) const;
};

RegularityParams estimate_params(const Problem& prob);
SemiconvexityBound semiconvexity_bound(const RegularityParams& params);

// Sampled semiconvexity constant of u(t0, .) on [x_lo, x_hi].
double semiconvexity_observed(const Problem& prob, double t0, double x_lo,
                              double x_hi, int nodes = 513,
                              const EvalOptions& opt = {});

}  // namespace hopflax
