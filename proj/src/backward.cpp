#include "hopflax/backward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hopflax/regularity.hpp"
#include "hopflax/util.hpp"

namespace hopflax {

namespace {

void require_terminal(const Problem& prob, const char* op) {
  if (!prob.terminal() || prob.concave())
    throw InputError(std::string(op) + " needs a terminal-data problem");
  if (prob.dim() != 1)
    throw InputError(std::string(op) + " is one-dimensional");
}

LineData terminal_line_data(const Problem& prob) {
  const ScalarFunction* g = &prob.data();
  LineData d;
  d.scan = [g](double y) { return (*g)(y); };
  d.exact = d.scan;
  d.deriv = [g](double y, int side) { return g->deriv1(y, side); };
  d.lipschitz = prob.ball().data_lipschitz;
  return d;
}

}  // namespace

double backward_value(const Problem& prob, double t, double x,
                      const EvalOptions& opt) {
  require_terminal(prob, "backward_value");
  const double s = prob.horizon() - t;
  if (s < 0) throw InputError("time beyond the horizon");
  return concave_value(prob.conjugate(), terminal_line_data(prob), s, x, opt);
}

SolutionGrid backward_grid(const Problem& prob, std::span<const double> t_nodes,
                           std::span<const double> x_nodes, const EvalOptions& opt) {
  require_terminal(prob, "backward_grid");
  SolutionGrid grid;
  grid.dim = 1;
  grid.t_nodes.assign(t_nodes.begin(), t_nodes.end());
  grid.x_nodes.assign(x_nodes.begin(), x_nodes.end());
  const std::size_t total = grid.t_nodes.size() * grid.x_nodes.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  grid.values.assign(total, nan);
  grid.p_t.assign(total, nan);
  grid.p_x.assign(total, nan);
  grid.differentiable.assign(total, 0);
  grid.status.assign(total, 0);
  const std::size_t n1 = grid.x_nodes.size();
  parallel_for(total, opt.jobs, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const double t = grid.t_nodes[k / n1];
      const double x = grid.x_nodes[k % n1];
      try {
        grid.values[k] = backward_value(prob, t, x, opt);
        if (prob.horizon() - t <= opt.t_min) grid.status[k] = 1;
      } catch (const NumericalError&) {
        grid.status[k] = 2;
      }
    }
  });
  return grid;
}

namespace {

struct Snapshot {
  ScalarFunction values;  // w(0, .) on a symmetric grid
  double lipschitz = 0.0;
};

// Transport the terminal datum to time 0 on a kink-friendly grid: symmetric
// window with an odd node count keeps an origin kink node-aligned.
Snapshot transport_to_start(const Problem& prob, int grid_nodes,
                            const EvalOptions& opt) {
  const double reach = prob.ball().radius(prob.horizon());
  const double half = std::max(std::abs(prob.window_lo(0)), std::abs(prob.window_hi(0))) +
                      reach + 0.5;
  if (grid_nodes % 2 == 0) ++grid_nodes;
  const double dx = 2.0 * half / (grid_nodes - 1);
  std::vector<double> vals(static_cast<std::size_t>(grid_nodes));
  const LineData g = terminal_line_data(prob);
  parallel_for(vals.size(), opt.jobs, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i)
      vals[i] = concave_value(prob.conjugate(), g, prob.horizon(),
                              -half + dx * static_cast<double>(i), opt);
  });
  Snapshot snap;
  snap.values = ScalarFunction::grid1(-half, dx, std::move(vals));
  snap.lipschitz = prob.ball().data_lipschitz;
  snap.values.set_lipschitz(snap.lipschitz);
  return snap;
}

LineData snapshot_line_data(const Snapshot& snap) {
  const ScalarFunction* f = &snap.values;
  LineData d;
  d.scan = [f](double y) { return (*f)(y); };
  d.exact = d.scan;
  d.deriv = [f](double y, int side) { return f->deriv1(y, side); };
  d.lipschitz = snap.lipschitz;
  return d;
}

}  // namespace

namespace {

BfReport bf_from_snapshot(const Problem& prob, const Snapshot& snap, double tol,
                          const EvalOptions& opt) {
  BfReport rep;
  rep.tol = tol > 0 ? tol : 1e-5;

  const LineData start = snapshot_line_data(snap);
  rep.x = linspace(prob.window_lo(0), prob.window_hi(0), 257);
  rep.deviation.assign(rep.x.size(), 0.0);
  parallel_for(rep.x.size(), opt.jobs, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double fwd =
          minimize_line(prob.conjugate(), start, prob.horizon(), rep.x[i], opt).value;
      rep.deviation[i] = fwd - prob.data()(rep.x[i]);
    }
  });
  for (std::size_t i = 0; i < rep.x.size(); ++i)
    if (std::abs(rep.deviation[i]) > rep.max_deviation) {
      rep.max_deviation = std::abs(rep.deviation[i]);
      rep.worst_x = rep.x[i];
    }
  rep.holds = rep.max_deviation <= rep.tol;
  return rep;
}

}  // namespace

BfReport bf_condition(const Problem& prob, int grid_nodes, double tol,
                      const EvalOptions& opt) {
  require_terminal(prob, "bf_condition");
  return bf_from_snapshot(prob, transport_to_start(prob, grid_nodes, opt), tol, opt);
}

RoundtripReport roundtrip(const Problem& prob, int grid_nodes, double tol,
                          const EvalOptions& opt) {
  require_terminal(prob, "roundtrip");
  RoundtripReport rep;
  const Snapshot snap = transport_to_start(prob, grid_nodes, opt);
  rep.bf = bf_from_snapshot(prob, snap, tol, opt);
  rep.holds = rep.bf.holds;
  rep.within_theorem =
      prob.data().kinks(prob.window_lo(0), prob.window_hi(0)).empty();

  Problem::Config cfg;
  cfg.hamiltonian = prob.field();
  cfg.data = snap.values;
  cfg.horizon = prob.horizon();
  cfg.window_lo[0] = prob.window_lo(0);
  cfg.window_hi[0] = prob.window_hi(0);
  cfg.lipschitz_hint = snap.lipschitz;
  cfg.name = prob.name() + "/forward";
  const Problem fwd = Problem::make_unchecked(std::move(cfg));

  const std::vector<double> xs = linspace(prob.window_lo(0), prob.window_hi(0), 129);
  for (double x : xs) {
    const double err = std::abs(evaluate1(fwd, prob.horizon(), x, opt) - prob.data()(x));
    if (err > rep.sup_error) {
      rep.sup_error = err;
      rep.worst_x = x;
    }
  }

  // forward and backward values should agree on the whole strip exactly when
  // the condition holds
  for (int i = 1; i <= 9; ++i) {
    const double t = prob.horizon() * i / 10.0;
    for (double x : xs)
      rep.equality_error = std::max(
          rep.equality_error,
          std::abs(evaluate1(fwd, t, x, opt) - backward_value(prob, t, x, opt)));
  }

  EvalOptions reduced = opt;
  reduced.resolution = 512;
  const StripReport strip = differentiability_strip(
      fwd, 0.0, prob.horizon(), prob.window_lo(0), prob.window_hi(0), 16, 129, reduced);
  rep.t_star_numeric = strip.t_star_numeric;
  rep.strip_full = !strip.times.empty() &&
                   strip.t_star_numeric >= strip.times.back() - 1e-12;
  return rep;
}

}  // namespace hopflax
