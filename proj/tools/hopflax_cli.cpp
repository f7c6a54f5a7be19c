#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hopflax/backward.hpp"
#include "hopflax/characteristics.hpp"
#include "hopflax/emit.hpp"
#include "hopflax/problem_file.hpp"
#include "hopflax/regularity.hpp"
#include "hopflax/semidiff.hpp"
#include "hopflax/util.hpp"
#include "hopflax/viscosity.hpp"

namespace {

using namespace hopflax;

struct CommonArgs {
  std::string problem_path;
  std::string out_path;
  std::string format = "csv";
  double tol = -1.0;      // <0 = use the problem file / built-in default
  int resolution = -1;    // <0 = use the problem file / engine default
  int jobs = 1;
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--problem", args->problem_path, "problem definition file")
      ->required();
  sub->add_option("--out", args->out_path, "output path (default: stdout)");
  sub->add_option("--format", args->format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--tol", args->tol, "tolerance override");
  sub->add_option("--resolution", args->resolution, "search resolution override");
  sub->add_option("--jobs", args->jobs, "worker threads")->check(CLI::PositiveNumber);
}

EvalOptions options_for(const CommonArgs& args, const ProblemFile& pf) {
  EvalOptions opt;
  opt.resolution = args.resolution >= 0 ? args.resolution : pf.tolerances.resolution;
  opt.jobs = args.jobs;
  return opt;
}

double tol_for(const CommonArgs& args, double fallback) {
  return args.tol >= 0 ? args.tol : fallback;
}

void deliver(const CommonArgs& args, const std::string& content) {
  if (args.out_path.empty())
    std::fwrite(content.data(), 1, content.size(), stdout);
  else
    write_file(args.out_path, content);
}

// ---- solve ----------------------------------------------------------------

SolutionGrid concave_grid(const Problem& prob, const std::vector<double>& ts,
                          const std::vector<double>& xs, const EvalOptions& opt) {
  SolutionGrid grid;
  grid.dim = 1;
  grid.t_nodes = ts;
  grid.x_nodes = xs;
  const std::size_t total = ts.size() * xs.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  grid.values.assign(total, nan);
  grid.p_t.assign(total, nan);
  grid.p_x.assign(total, nan);
  grid.differentiable.assign(total, 0);
  grid.status.assign(total, 0);
  parallel_for(total, opt.jobs, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const double t = ts[k / xs.size()];
      const double x = xs[k % xs.size()];
      try {
        grid.values[k] = evaluate_concave(prob, t, x, opt);
        if (t <= opt.t_min) grid.status[k] = 1;
      } catch (const NumericalError&) {
        grid.status[k] = 2;
      }
    }
  });
  return grid;
}

int run_solve(const CommonArgs& args) {
  const ProblemFile pf = load_problem(args.problem_path);
  const EvalOptions opt = options_for(args, pf);
  const std::vector<double> ts =
      linspace(pf.query.t_lo, pf.query.t_hi, pf.query.t_nodes);
  const std::vector<double> xs = linspace(pf.problem.window_lo(0),
                                          pf.problem.window_hi(0), pf.query.x_nodes);
  SolutionGrid grid;
  if (pf.problem.terminal()) {
    grid = backward_grid(pf.problem, ts, xs, opt);
  } else if (pf.problem.concave()) {
    grid = concave_grid(pf.problem, ts, xs, opt);
  } else if (pf.problem.dim() == 2) {
    const std::vector<double> x2 = linspace(
        pf.problem.window_lo(1), pf.problem.window_hi(1), pf.query.x2_nodes);
    grid = solve_grid(pf.problem, ts, xs, x2, opt);
  } else {
    grid = solve_grid(pf.problem, ts, xs, {}, opt);
  }
  deliver(args, parse_format(args.format) == Format::Csv ? to_csv(grid)
                                                         : to_json(grid));
  return 0;
}

// ---- conjugate -------------------------------------------------------------

int run_conjugate(const CommonArgs& args) {
  const ProblemFile pf = load_problem(args.problem_path);
  if (pf.problem.dim() != 1)
    throw InputError("conjugate tables are one-dimensional; split a separable "
                     "Hamiltonian into its parts first");
  const double span = pf.problem.ball().max_velocity;
  const int nodes = args.resolution > 1 ? args.resolution
                    : pf.tolerances.resolution > 1 ? pf.tolerances.resolution
                                                   : 1025;
  ConjugateTable table;
  table.z = linspace(-span, span, nodes);
  table.value.resize(table.z.size());
  table.arg.resize(table.z.size());
  for (std::size_t i = 0; i < table.z.size(); ++i) {
    double v, a;
    pf.problem.conjugate().value_grad1(table.z[i], &v, &a);
    table.value[i] = v;
    table.arg[i] = a;
  }
  deliver(args, parse_format(args.format) == Format::Csv ? to_csv(table)
                                                         : to_json(table));
  return 0;
}

// ---- characteristics -------------------------------------------------------

int run_characteristics(const CommonArgs& args) {
  const ProblemFile pf = load_problem(args.problem_path);
  const EvalOptions opt = options_for(args, pf);
  const Problem& prob = pf.problem;

  if (!pf.query.slope.empty()) {
    if (pf.query.origin.empty())
      throw InputError("a slope needs an origin in the [query] section");
    const Characteristic curve = forward_curve(prob, pf.query.origin, pf.query.slope);
    const ClassifyAlongReport report = classify_along(prob, curve, pf.query.times, opt);
    deliver(args, parse_format(args.format) == Format::Csv
                      ? to_csv(curve, report)
                      : to_json(curve, report));
    return 0;
  }

  // no slope: emit the polyline family seeded by the datum's derivative
  // bundle at the origin (endpoints of each branch, fallback zero)
  if (pf.query.origin.empty())
    throw InputError("the characteristics command needs a [query] origin");
  if (prob.dim() != 1)
    throw InputError("curve families without an explicit slope are one-dimensional");
  const double y0 = pf.query.origin[0];
  const DSharpSet ds = d_sharp(prob.data(), pf.query.origin);
  std::vector<double> slopes;
  for (const SemidiffSet* s : {&ds.sup, &ds.sub}) {
    if (s->is_empty()) continue;
    const Interval iv = s->interval_bounds();
    slopes.push_back(iv.lo);
    if (iv.hi != iv.lo) slopes.push_back(iv.hi);
    if (iv.hi - iv.lo > 1e-9) slopes.push_back(0.5 * (iv.lo + iv.hi));
  }
  if (ds.zero_fallback) slopes.push_back(0.0);
  std::sort(slopes.begin(), slopes.end());
  slopes.erase(std::unique(slopes.begin(), slopes.end()), slopes.end());

  std::vector<Characteristic> curves;
  for (double q : slopes)
    curves.push_back(forward_curve(prob, std::span<const double>(&y0, 1),
                                   std::span<const double>(&q, 1)));
  const std::vector<double> times =
      pf.query.times.empty() ? linspace(0.0, prob.horizon(), 33) : pf.query.times;
  if (parse_format(args.format) == Format::Csv) {
    deliver(args, curve_family_csv(curves, times));
  } else {
    std::string json = "{\n  \"curves\": [";
    for (std::size_t k = 0; k < curves.size(); ++k) {
      json += k ? "," : "";
      json += "\n    {\"origin\": " + format_g17(curves[k].origin[0]) +
              ", \"slope\": " + format_g17(curves[k].slope[0]) +
              ", \"velocity\": " + format_g17(curves[k].velocity[0]) + "}";
    }
    json += "\n  ]\n}\n";
    deliver(args, json);
  }
  return 0;
}

// ---- regularity ------------------------------------------------------------

int run_regularity(const CommonArgs& args, int planes, int nodes) {
  const ProblemFile pf = load_problem(args.problem_path);
  const EvalOptions opt = options_for(args, pf);
  const StripReport report = differentiability_strip(
      pf.problem, pf.query.t_lo, pf.query.t_hi, pf.problem.window_lo(0),
      pf.problem.window_hi(0), planes, nodes, opt);
  deliver(args, parse_format(args.format) == Format::Csv ? to_csv(report)
                                                         : to_json(report));
  return 0;
}

// ---- verify ----------------------------------------------------------------

ScalarFunction read_candidate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open candidate file: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("t,x,u", 0) != 0)
    throw InputError("candidate CSV needs a 't,x,u' header");
  std::vector<double> ts, xs, us;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    double t, x, u;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &x, &u) != 3)
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad candidate row",
                       0);
    ts.push_back(t);
    xs.push_back(x);
    us.push_back(u);
  }
  std::set<double> tset(ts.begin(), ts.end()), xset(xs.begin(), xs.end());
  const std::vector<double> tu(tset.begin(), tset.end()), xu(xset.begin(), xset.end());
  if (tu.size() < 2 || xu.size() < 2 || tu.size() * xu.size() != us.size())
    throw InputError("candidate CSV is not a full rectangular grid");
  const double dt = (tu.back() - tu.front()) / (tu.size() - 1);
  const double dx = (xu.back() - xu.front()) / (xu.size() - 1);
  for (std::size_t i = 0; i < tu.size(); ++i)
    if (std::abs(tu[i] - (tu.front() + dt * i)) > 1e-9 * (1 + std::abs(tu[i])))
      throw InputError("candidate CSV time nodes are not uniform");
  for (std::size_t i = 0; i < xu.size(); ++i)
    if (std::abs(xu[i] - (xu.front() + dx * i)) > 1e-9 * (1 + std::abs(xu[i])))
      throw InputError("candidate CSV space nodes are not uniform");
  std::vector<double> values(us.size());
  std::map<double, std::size_t> ti, xi;
  for (std::size_t i = 0; i < tu.size(); ++i) ti[tu[i]] = i;
  for (std::size_t i = 0; i < xu.size(); ++i) xi[xu[i]] = i;
  for (std::size_t r = 0; r < us.size(); ++r)
    values[xi[xs[r]] * tu.size() + ti[ts[r]]] = us[r];
  return ScalarFunction::grid2(tu.front(), xu.front(), dt, dx,
                               static_cast<int>(tu.size()),
                               static_cast<int>(xu.size()), std::move(values));
}

int run_verify(const CommonArgs& args, const std::string& candidate, int planes,
               int nodes) {
  const ProblemFile pf = load_problem(args.problem_path);
  const EvalOptions opt = options_for(args, pf);
  const double tol = tol_for(args, pf.tolerances.tol);
  RegionVerdict verdict;
  if (candidate.empty()) {
    verdict = verify_region(pf.problem, pf.query.t_lo, pf.query.t_hi,
                            pf.problem.window_lo(0), pf.problem.window_hi(0),
                            planes, nodes, tol, opt);
  } else {
    ScalarFunction v;
    if (candidate.size() > 4 && candidate.substr(candidate.size() - 4) == ".csv")
      v = read_candidate_csv(candidate);
    else
      v = ScalarFunction::from_expression(parse_candidate(candidate));
    verdict = verify_candidate(pf.problem, v, pf.query.t_lo, pf.query.t_hi,
                               pf.problem.window_lo(0), pf.problem.window_hi(0),
                               planes, nodes, tol, opt);
  }
  deliver(args, parse_format(args.format) == Format::Csv ? to_csv(verdict)
                                                         : to_json(verdict));
  return 0;
}

// ---- roundtrip ---------------------------------------------------------------

int run_roundtrip(const CommonArgs& args, int grid_nodes) {
  const ProblemFile pf = load_problem(args.problem_path);
  const EvalOptions opt = options_for(args, pf);
  const RoundtripReport report =
      roundtrip(pf.problem, grid_nodes, tol_for(args, pf.tolerances.bf_tol), opt);
  deliver(args, parse_format(args.format) == Format::Csv ? to_csv(report)
                                                         : to_json(report));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hopf-Lax solver and analysis toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  int planes = 0, nodes = 0, grid_nodes = 8193;

  CLI::App* solve = app.add_subcommand("solve", "solution values on a grid");
  add_common(solve, &args);
  CLI::App* conjugate =
      app.add_subcommand("conjugate", "table of the convex conjugate");
  add_common(conjugate, &args);
  CLI::App* characteristics = app.add_subcommand(
      "characteristics", "classify a characteristic or emit a curve family");
  add_common(characteristics, &args);
  CLI::App* regularity =
      app.add_subcommand("regularity", "differentiability strip scan and bound");
  add_common(regularity, &args);
  regularity->add_option("--planes", planes, "time planes (default 32)");
  regularity->add_option("--nodes", nodes, "abscissae per plane (default 513)");
  CLI::App* verify =
      app.add_subcommand("verify", "check the equation in the viscosity sense");
  add_common(verify, &args);
  std::string candidate;
  verify->add_option("--candidate", candidate,
                     "candidate surface: expression in t,x or CSV path");
  verify->add_option("--planes", planes, "time planes (default 16)");
  verify->add_option("--nodes", nodes, "abscissae per plane (default 129)");
  CLI::App* roundtrip_cmd = app.add_subcommand(
      "roundtrip", "backward transport, forward return, comparison");
  add_common(roundtrip_cmd, &args);
  roundtrip_cmd->add_option("--grid-nodes", grid_nodes,
                            "snapshot grid nodes (default 8193)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return run_solve(args);
    if (conjugate->parsed()) return run_conjugate(args);
    if (characteristics->parsed()) return run_characteristics(args);
    if (regularity->parsed())
      return run_regularity(args, planes > 0 ? planes : 32, nodes > 0 ? nodes : 513);
    if (verify->parsed())
      return run_verify(args, candidate, planes > 0 ? planes : 16,
                        nodes > 0 ? nodes : 129);
    if (roundtrip_cmd->parsed()) return run_roundtrip(args, grid_nodes);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const HypothesisError& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
