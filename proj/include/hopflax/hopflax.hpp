#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hopflax/problem.hpp"

namespace hopflax {

struct EvalOptions {
  int resolution = 0;          // scan nodes per axis; 0 = 2048 (1-D) / 192 (2-D)
  double epsilon_coeff = 1e-6; // minimizer acceptance band eps = coeff*(1+|u|)
  int cluster_steps = 3;       // minimizers closer than this many steps merge
  int margin_steps = 4;        // scan window padding beyond the search ball
  int max_expansions = 6;      // window doublings before numerical failure
  double t_min = 1e-4;         // below this the value is the data itself
  int jobs = 1;                // worker threads for grid sweeps
};

struct Minimizer {
  std::array<double, 2> y{};
  double value = 0.0;
};

struct MinimizerSet {
  std::vector<Minimizer> points;  // ascending (lexicographic in 2-D)
  double value = 0.0;             // u(t,x)
  double epsilon = 0.0;           // acceptance band used
  double step = 0.0;              // scan step of the accepted window
  bool boundary_regime = false;   // t <= t_min: points = {x}
  int dim = 1;
  bool singleton() const { return points.size() == 1; }
};

struct GradientPair {
  double p_t = 0.0;
  std::array<double, 2> p{};
};

struct SolutionGrid {
  std::vector<double> t_nodes, x_nodes, x2_nodes;  // x2_nodes empty in 1-D
  // row-major over (t, x2, x): index = (it*n2 + j)*n1 + i
  std::vector<double> values;
  std::vector<double> p_t, p_x, p_x2;  // NaN where the gradient does not exist
  std::vector<std::uint8_t> differentiable;
  std::vector<std::uint8_t> status;  // 0 ok, 1 boundary regime, 2 failed
  int dim = 1;
};

struct SemigroupReport {
  double direct = 0.0;    // u(t,x) in one step from the data
  double nested = 0.0;    // min_y { u(s,y) + (t-s) H*((x-y)/(t-s)) }
  double residual = 0.0;  // |direct - nested|
  double inner_argmin = 0.0;
};

double evaluate(const Problem& prob, double t, std::span<const double> x,
                const EvalOptions& opt = {});
double evaluate1(const Problem& prob, double t, double x, const EvalOptions& opt = {});

MinimizerSet minimizer_set(const Problem& prob, double t, std::span<const double> x,
                           const EvalOptions& opt = {});

// Gradient (p_t, p) where the solution is differentiable;
// throws NondifferentiableError when the minimizer set is not a singleton.
GradientPair gradient_at(const Problem& prob, double t, std::span<const double> x,
                         const EvalOptions& opt = {});

SolutionGrid solve_grid(const Problem& prob, std::span<const double> t_nodes,
                        std::span<const double> x_nodes,
                        std::span<const double> x2_nodes = {},
                        const EvalOptions& opt = {});

SemigroupReport semigroup_check(const Problem& prob, double s, double t, double x,
                                const EvalOptions& opt = {});

// Max-form value for a concave-mode problem (concave K):
//   u(t,x) = max_y { data(y) + t K_*((x-y)/t) },  K_*(z) = min_p {zp - K(p)}.
double evaluate_concave(const Problem& prob, double t, double x,
                        const EvalOptions& opt = {});

// -- engine entry points shared with the backward/semigroup paths ----------

// One-dimensional minimization data: a cheap value for the grid pass, the
// authoritative value for polishing, and (optionally) one-sided derivatives;
// without derivatives the polish falls back to golden-section on `exact`.
struct LineData {
  std::function<double(double)> scan;
  std::function<double(double)> exact;
  std::function<double(double, int)> deriv;  // (y, side); side = +1 / -1
  double lipschitz = 1.0;
};

// min over y of  data(y) + t * conj*((x - y)/t); full minimizer bookkeeping.
MinimizerSet minimize_line(const ConjugateOracle& conj, const LineData& data,
                           double t, double x, const EvalOptions& opt = {});

// max over y of  g(y) - s * conj*((y - x)/s)  (the concave sweep; `conj` is
// the oracle of the already-convex field). Used by the backward module.
double concave_value(const ConjugateOracle& conj, const LineData& g, double s,
                     double x, const EvalOptions& opt = {});

}  // namespace hopflax
