#pragma once

#include <span>
#include <vector>

#include "hopflax/hopflax.hpp"
#include "hopflax/problem.hpp"

namespace hopflax {

// Value transported backward from the terminal datum:
//   w(t, x) = max_y { g(y) - (T-t) H*((y-x)/(T-t)) },  w(T, .) = g.
// The problem must carry terminal data (terminal flag set).
double backward_value(const Problem& prob, double t, double x,
                      const EvalOptions& opt = {});

SolutionGrid backward_grid(const Problem& prob, std::span<const double> t_nodes,
                           std::span<const double> x_nodes,
                           const EvalOptions& opt = {});

// Backward-forward condition on the terminal datum: transport g to time 0,
// run the forward value from that snapshot, compare at the horizon.
struct BfReport {
  bool holds = false;
  double max_deviation = 0.0;
  double tol = 0.0;
  double worst_x = 0.0;
  std::vector<double> x;          // profile abscissae over the problem window
  std::vector<double> deviation;  // signed forward-minus-datum profile
};

BfReport bf_condition(const Problem& prob, int grid_nodes = 8193,
                      double tol = 1e-5, const EvalOptions& opt = {});

struct RoundtripReport {
  BfReport bf;
  bool holds = false;           // same verdict as bf
  double sup_error = 0.0;       // terminal-plane error of the forward value
  double worst_x = 0.0;
  double equality_error = 0.0;  // max |forward - backward| over the strip
  bool strip_full = false;      // forward value differentiable up to the horizon
  double t_star_numeric = 0.0;
  bool within_theorem = false;  // kink-free terminal datum
};

RoundtripReport roundtrip(const Problem& prob, int grid_nodes = 8193,
                          double tol = 1e-5, const EvalOptions& opt = {});

}  // namespace hopflax
