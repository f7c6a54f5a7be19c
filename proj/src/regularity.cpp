#include "hopflax/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hopflax/convex.hpp"
#include "hopflax/util.hpp"

namespace hopflax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScalarFunction negated(const ScalarFunction& f) {
  if (f.repr() == ScalarFunction::Repr::Grid) {
    std::vector<double> vals = f.grid_values();
    for (double& v : vals) v = -v;
    if (f.dimension() == 1)
      return ScalarFunction::grid1(f.grid_x0(0), f.grid_dx(0), std::move(vals));
    return ScalarFunction::grid2(f.grid_x0(0), f.grid_x0(1), f.grid_dx(0),
                                 f.grid_dx(1), f.grid_n(0), f.grid_n(1),
                                 std::move(vals));
  }
  return ScalarFunction::from_expression(Expression::negate(*f.expression()));
}

}  // namespace

std::pair<bool, MinimizerSet> is_differentiable_at(const Problem& prob, double t,
                                                   std::span<const double> x,
                                                   const EvalOptions& opt) {
  MinimizerSet ms = minimizer_set(prob, t, x, opt);
  const bool diff = !ms.boundary_regime && ms.singleton();
  return {diff, std::move(ms)};
}

RegularityParams estimate_params(const Problem& prob) {
  if (prob.dim() != 1)
    throw InputError("regularity parameter estimation is one-dimensional");
  RegularityParams params;
  params.T = prob.horizon();

  const double zspan = std::max(prob.ball().max_velocity, 1.0);
  const ScalarFunction h_sf = ScalarFunction::from_expression(prob.convex_field());
  const ScalarFunction h_star = fenchel_conjugate(h_sf, -zspan, zspan, 4097);
  params.theta = 2.0 * estimate_uniform_convexity(h_star, -zspan, zspan);

  const SemiconcavityEstimate defect = estimate_semiconcavity(
      negated(prob.data()), prob.window_lo(0), prob.window_hi(0));
  params.B = defect.infinite ? kInf : std::max(defect.constant, 0.0);
  return params;
}

double SemiconvexityBound::constant_at(double t0) const {
  if (!applicable || !(t0 > 0) || !(t0 < t_star)) return kInf;
  if (B == 0.0) return 0.0;
  if (gamma) {
    const double lambda = theta * *gamma;
    if (!(lambda > B)) return kInf;
    return lambda * B / (*gamma * t0 * (lambda - B));
  }
  return theta * B / (theta - B * t0);
}

SemiconvexityBound semiconvexity_bound(const RegularityParams& params) {
  if (!(params.theta > 0))
    throw HypothesisError("conjugate is not uniformly convex on the slope window");
  SemiconvexityBound out;
  out.theta = params.theta;
  out.B = params.B;
  out.gamma = params.gamma;
  if (std::isinf(params.B)) {
    out.t_star = 0.0;
    out.applicable = false;
    return out;
  }
  out.applicable = true;
  double height = params.B == 0.0 ? params.T : params.theta / params.B;
  if (params.gamma) {
    if (!(*params.gamma > 0)) throw InputError("gamma must be positive");
    height = std::min(height, 1.0 / *params.gamma);
  }
  out.t_star = std::min(params.T, height);
  return out;
}

StripReport differentiability_strip(const Problem& prob, double t_lo, double t_hi,
                                    double x_lo, double x_hi, int nt, int nx,
                                    const EvalOptions& opt) {
  if (prob.dim() != 1) throw InputError("the strip scan is one-dimensional");
  if (!(t_hi > t_lo) || nt < 1 || nx < 2) throw InputError("bad strip geometry");

  StripReport rep;
  rep.params = estimate_params(prob);
  const SemiconvexityBound bound = semiconvexity_bound(rep.params);
  rep.t_star_bound = bound.t_star;
  rep.bound_applicable = bound.applicable;

  const double dt = (t_hi - t_lo) / nt;
  for (int i = 1; i <= nt; ++i) rep.times.push_back(t_lo + dt * i);
  const std::vector<double> xs = linspace(x_lo, x_hi, nx);

  rep.plane_ok.assign(rep.times.size(), 1);
  std::vector<std::vector<StripReport::Failure>> plane_failures(rep.times.size());
  parallel_for(rep.times.size(), opt.jobs, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double t = rep.times[i];
      for (double x : xs) {
        bool ok = false;
        try {
          ok = is_differentiable_at(prob, t, std::span<const double>(&x, 1), opt).first;
        } catch (const NumericalError&) {
        }
        if (!ok) {
          rep.plane_ok[i] = 0;
          if (plane_failures[i].size() < 4) plane_failures[i].push_back({t, x});
        }
      }
    }
  });
  for (const auto& pf : plane_failures)
    for (const StripReport::Failure& f : pf)
      if (rep.failures.size() < 16) rep.failures.push_back(f);

  rep.t_star_numeric = 0.0;
  for (std::size_t i = 0; i < rep.times.size() && rep.plane_ok[i]; ++i)
    rep.t_star_numeric = rep.times[i];
  return rep;
}

double semiconvexity_observed(const Problem& prob, double t0, double x_lo,
                              double x_hi, int nodes, const EvalOptions& opt) {
  if (prob.dim() != 1) throw InputError("the observed constant is one-dimensional");
  std::vector<double> vals(static_cast<std::size_t>(nodes));
  const double dx = (x_hi - x_lo) / (nodes - 1);
  parallel_for(static_cast<std::size_t>(nodes), opt.jobs,
               [&](std::size_t i0, std::size_t i1) {
                 for (std::size_t i = i0; i < i1; ++i)
                   vals[i] = -evaluate1(prob, t0, x_lo + dx * static_cast<double>(i), opt);
               });
  ScalarFunction neg_u = ScalarFunction::grid1(x_lo, dx, std::move(vals));
  const SemiconcavityEstimate est =
      estimate_semiconcavity(neg_u, x_lo, x_hi, (nodes - 1) / 2 + 1);
  return est.infinite ? kInf : std::max(est.constant, 0.0);
}

}  // namespace hopflax
