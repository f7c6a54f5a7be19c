#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hopflax/problem.hpp"

namespace hopflax {

// Query-side settings read from a problem file; subcommands use the slice
// they need and ignore the rest.
struct QuerySpec {
  double t_lo = 0.0, t_hi = 0.0;  // t_hi defaults to the horizon
  int t_nodes = 33;
  int x_nodes = 257;
  int x2_nodes = 0;  // defaults to x_nodes for 2-D problems
  std::vector<double> point;
  std::vector<double> origin;
  std::vector<double> slope;
  std::vector<double> times;
};

struct ToleranceSpec {
  double tol = 1e-6;
  int resolution = 0;  // 0 = engine default
  double bf_tol = 1e-5;
};

struct ProblemFile {
  Problem problem;
  QuerySpec query;
  ToleranceSpec tolerances;
};

// Flat key = value sections:
//   [problem]    name, dim, hamiltonian, sigma | terminal, horizon, concave,
//                lipschitz
//   [windows]    x_lo, x_hi, x2_lo, x2_hi, t_lo, t_hi
//   [query]      t_nodes, x_nodes, x2_nodes, point, origin, slope, times
//   [tolerances] tol, resolution, bf_tol
// '#' starts a comment. Errors carry origin:line:column positions; the
// Hamiltonian is refused (with a witness) when it fails the convexity checks.
ProblemFile parse_problem_text(const std::string& text, const std::string& origin);
ProblemFile load_problem(const std::string& path);

}  // namespace hopflax
