#pragma once

#include <memory>
#include <optional>
#include <string>

#include "hopflax/convex.hpp"

namespace hopflax {

// Initial-point search window. Every minimizer of the Hopf-Lax objective for
// a query (t,x) satisfies |y - x| <= t * max_velocity, where max_velocity
// bounds |H_p| over the slope range the data can produce (|q| <= L + 1).
struct SearchBall {
  double data_lipschitz = 1.0;
  double max_velocity = 1.0;
  double radius(double t) const { return (t < 0 ? -t : t) * max_velocity; }
};

struct HypothesisReport {
  ConvexityReport hamiltonian;  // of the convex field (H, or -K in concave mode)
  std::string diagnostic;       // empty when every verdict passes
  bool ok() const { return diagnostic.empty(); }
};

// Immutable problem instance: Hamiltonian, initial (or terminal) data, the
// horizon, reporting windows, plus the precomputed conjugate oracle and
// search ball. Copies share state.
class Problem {
 public:
  struct Config {
    Expression hamiltonian;  // H; in concave mode this is the concave K
    ScalarFunction data;     // sigma, or the terminal payoff g
    double horizon = 1.0;
    double window_lo[2] = {-4.0, -4.0};
    double window_hi[2] = {4.0, 4.0};
    bool concave = false;   // max-form problem driven by concave K
    bool terminal = false;  // data plays the terminal-payoff role
    std::optional<double> lipschitz_hint;
    std::string name;
  };

  Problem() = default;

  // Runs the hypothesis verdicts (convex, strictly convex, superlinear on the
  // convex field) and throws HypothesisError naming the witness on failure.
  static Problem make(Config cfg);
  // Same construction with the verdicts recorded but not enforced.
  static Problem make_unchecked(Config cfg);

  bool valid() const { return impl_ != nullptr; }
  int dim() const;
  const Expression& field() const;         // Hamiltonian as configured
  const Expression& convex_field() const;  // H, or -K in concave mode
  const ScalarFunction& data() const;
  const ConjugateOracle& conjugate() const;
  double horizon() const;
  double window_lo(int axis = 0) const;
  double window_hi(int axis = 0) const;
  bool concave() const;
  bool terminal() const;
  const std::string& name() const;
  const SearchBall& ball() const;
  const HypothesisReport& hypotheses() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace hopflax
