#pragma once

#include <array>
#include <span>
#include <vector>

#include "hopflax/hopflax.hpp"
#include "hopflax/problem.hpp"

namespace hopflax {

// Which part of the datum's derivative bundle supplied the slope.
enum class Branch { Sup, Sub, ZeroFallback };

// Straight line y + t H_p(q) seeded by an admissible datum slope q.
struct Characteristic {
  std::array<double, 2> origin{};
  std::array<double, 2> slope{};
  std::array<double, 2> velocity{};
  int dim = 1;
  Branch branch = Branch::Sup;

  std::array<double, 2> at(double t) const {
    return {origin[0] + t * velocity[0], origin[1] + t * velocity[1]};
  }
};

// Validates q against the derivative bundle of the datum at the origin
// (InputError otherwise) and fills in the transport velocity.
Characteristic forward_curve(const Problem& prob, std::span<const double> origin,
                             std::span<const double> slope);

struct PreimagePoint {
  std::array<double, 2> y{};
  std::array<double, 2> q{};  // forced slope, the conjugate gradient at (x-y)/t
  bool type_one = false;      // y also attains the minimum
};

// All origins whose characteristic reaches (t, x), minimizers included.
struct PreimageSet {
  std::vector<PreimagePoint> points;
  MinimizerSet minimizers;
};

PreimageSet preimage_set(const Problem& prob, double t, std::span<const double> x,
                         const EvalOptions& opt = {});

enum class CurveType { I, II, NotThrough };

// I: the origin attains the minimum at (t, x).  II: the curve arrives with an
// admissible slope but the origin is not a minimizer.
CurveType classify_curve(const Problem& prob, const Characteristic& curve, double t,
                         std::span<const double> x, const EvalOptions& opt = {});

struct ClassifyAlongReport {
  std::vector<double> times;
  std::vector<CurveType> types;
  std::vector<char> clean;  // type I, singleton minimizer set at the origin
  bool any_type_one = false;
  // bracket for the crossing time sup{ t : type I at (t, x(t)) }
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  int persistence_violations = 0;  // scanned times below the bracket not clean
  bool non_monotone = false;       // type II strictly before a later type I
};

// Classifies the curve at each time (64 log-spaced over [T/1000, T] when
// times is empty) and brackets where type I stops.
ClassifyAlongReport classify_along(const Problem& prob, const Characteristic& curve,
                                   std::span<const double> times = {},
                                   const EvalOptions& opt = {});

// One (p_t, p_x) pair per minimizer, deduplicated and sorted by p_x.
std::vector<GradientPair> reachable_gradients(const Problem& prob, double t,
                                              std::span<const double> x,
                                              const EvalOptions& opt = {});

}  // namespace hopflax
