#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hopflax/backward.hpp"
#include "hopflax/characteristics.hpp"
#include "hopflax/emit.hpp"
#include "hopflax/problem_file.hpp"
#include "hopflax/regularity.hpp"
#include "hopflax/util.hpp"
#include "hopflax/viscosity.hpp"

namespace py = pybind11;
using namespace hopflax;

namespace {

EvalOptions make_options(int resolution, int jobs) {
  EvalOptions opt;
  opt.resolution = resolution;
  opt.jobs = jobs;
  return opt;
}

}  // namespace

PYBIND11_MODULE(_hopflax, m) {
  m.doc() = "Hopf-Lax viscosity solutions: values, minimizers, gradients, "
            "characteristics, regularity, verification";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<HypothesisError>(m, "HypothesisError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<NondifferentiableError>(m, "NondifferentiableError",
                                                 PyExc_RuntimeError);

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("dim", &Problem::dim)
      .def_property_readonly("horizon", &Problem::horizon)
      .def_property_readonly("name", &Problem::name)
      .def_property_readonly("concave", &Problem::concave)
      .def_property_readonly("terminal", &Problem::terminal)
      .def("window", [](const Problem& p, int axis) {
        return std::make_pair(p.window_lo(axis), p.window_hi(axis));
      }, py::arg("axis") = 0);

  py::class_<ProblemFile>(m, "ProblemFile")
      .def_readonly("problem", &ProblemFile::problem)
      .def_property_readonly("tol",
                             [](const ProblemFile& pf) { return pf.tolerances.tol; })
      .def_property_readonly("bf_tol", [](const ProblemFile& pf) {
        return pf.tolerances.bf_tol;
      });

  m.def("load_problem", &load_problem, py::arg("path"));
  m.def(
      "parse_problem",
      [](const std::string& text, const std::string& origin) {
        return parse_problem_text(text, origin);
      },
      py::arg("text"), py::arg("origin") = std::string("<string>"));
  m.def(
      "make_problem",
      [](const std::string& hamiltonian, const std::string& data, int dim,
         double horizon, std::pair<double, double> window, bool concave,
         bool terminal) {
        Problem::Config cfg;
        cfg.hamiltonian = Expression::parse(hamiltonian, dim);
        cfg.data = ScalarFunction::from_expression(Expression::parse(data, dim));
        cfg.horizon = horizon;
        for (int a = 0; a < 2; ++a) {
          cfg.window_lo[a] = window.first;
          cfg.window_hi[a] = window.second;
        }
        cfg.concave = concave;
        cfg.terminal = terminal;
        cfg.name = "inline";
        return Problem::make(std::move(cfg));
      },
      py::arg("hamiltonian"), py::arg("data"), py::arg("dim") = 1,
      py::arg("horizon") = 1.0,
      py::arg("window") = std::make_pair(-4.0, 4.0), py::arg("concave") = false,
      py::arg("terminal") = false);

  m.def(
      "value",
      [](const Problem& prob, double t, std::vector<double> x, int resolution,
         int jobs) {
        return evaluate(prob, t, x, make_options(resolution, jobs));
      },
      py::arg("problem"), py::arg("t"), py::arg("x"), py::arg("resolution") = 0,
      py::arg("jobs") = 1);

  m.def(
      "minimizers",
      [](const Problem& prob, double t, std::vector<double> x, int resolution) {
        const MinimizerSet ms = minimizer_set(prob, t, x, make_options(resolution, 1));
        std::vector<std::vector<double>> pts;
        for (const Minimizer& p : ms.points)
          pts.push_back(ms.dim == 2
                            ? std::vector<double>{p.y[0], p.y[1]}
                            : std::vector<double>{p.y[0]});
        return py::make_tuple(ms.value, pts, ms.boundary_regime);
      },
      py::arg("problem"), py::arg("t"), py::arg("x"), py::arg("resolution") = 0);

  m.def(
      "gradient",
      [](const Problem& prob, double t, std::vector<double> x, int resolution) {
        const GradientPair g = gradient_at(prob, t, x, make_options(resolution, 1));
        std::vector<double> p(prob.dim());
        for (int a = 0; a < prob.dim(); ++a) p[a] = g.p[a];
        return py::make_tuple(g.p_t, p);
      },
      py::arg("problem"), py::arg("t"), py::arg("x"), py::arg("resolution") = 0);

  m.def(
      "solve_grid_json",
      [](const Problem& prob, std::vector<double> ts, std::vector<double> xs,
         std::vector<double> x2, int resolution, int jobs) {
        return to_json(solve_grid(prob, ts, xs, x2, make_options(resolution, jobs)));
      },
      py::arg("problem"), py::arg("t_nodes"), py::arg("x_nodes"),
      py::arg("x2_nodes") = std::vector<double>{}, py::arg("resolution") = 0,
      py::arg("jobs") = 1);

  m.def(
      "conjugate_value",
      [](const Problem& prob, double z) {
        double v, a;
        prob.conjugate().value_grad1(z, &v, &a);
        return py::make_tuple(v, a);
      },
      py::arg("problem"), py::arg("z"));

  m.def(
      "preimage",
      [](const Problem& prob, double t, std::vector<double> x, int resolution) {
        const PreimageSet set = preimage_set(prob, t, x, make_options(resolution, 1));
        std::vector<py::tuple> rows;
        for (const PreimagePoint& p : set.points) {
          if (prob.dim() == 2)
            rows.push_back(py::make_tuple(
                std::vector<double>{p.y[0], p.y[1]},
                std::vector<double>{p.q[0], p.q[1]}, p.type_one));
          else
            rows.push_back(py::make_tuple(p.y[0], p.q[0], p.type_one));
        }
        return rows;
      },
      py::arg("problem"), py::arg("t"), py::arg("x"), py::arg("resolution") = 0);

  m.def(
      "classify_curve",
      [](const Problem& prob, double t, std::vector<double> origin,
         std::vector<double> slope, int resolution) {
        const Characteristic curve = forward_curve(prob, origin, slope);
        const auto x = curve.at(t);
        const CurveType type =
            classify_curve(prob, curve, t,
                           std::span<const double>(x.data(), prob.dim()),
                           make_options(resolution, 1));
        return type == CurveType::I ? "I" : type == CurveType::II ? "II"
                                                                  : "not_through";
      },
      py::arg("problem"), py::arg("t"), py::arg("origin"), py::arg("slope"),
      py::arg("resolution") = 0);

  m.def(
      "strip",
      [](const Problem& prob, double t_lo, double t_hi, int planes, int nodes,
         int resolution, int jobs) {
        const StripReport rep = differentiability_strip(
            prob, t_lo, t_hi, prob.window_lo(0), prob.window_hi(0), planes, nodes,
            make_options(resolution, jobs));
        return py::make_tuple(rep.t_star_numeric, rep.t_star_bound,
                              rep.bound_applicable);
      },
      py::arg("problem"), py::arg("t_lo"), py::arg("t_hi"), py::arg("planes") = 32,
      py::arg("nodes") = 513, py::arg("resolution") = 0, py::arg("jobs") = 1);

  m.def(
      "verify",
      [](const Problem& prob, double t_lo, double t_hi, int planes, int nodes,
         double tol, int resolution, int jobs) {
        if (t_hi <= t_lo) t_hi = prob.horizon();
        const RegionVerdict v =
            verify_region(prob, t_lo, t_hi, prob.window_lo(0), prob.window_hi(0),
                          planes, nodes, tol, make_options(resolution, jobs));
        return py::make_tuple(v.pass, v.worst_sub, v.worst_super, v.residual_max);
      },
      py::arg("problem"), py::arg("t_lo") = 0.0, py::arg("t_hi") = 0.0,
      py::arg("planes") = 16, py::arg("nodes") = 129, py::arg("tol") = 1e-8,
      py::arg("resolution") = 0, py::arg("jobs") = 1);

  m.def(
      "roundtrip",
      [](const Problem& prob, int grid_nodes, double tol, int jobs) {
        const RoundtripReport r =
            roundtrip(prob, grid_nodes, tol, make_options(0, jobs));
        return py::make_tuple(r.holds, r.bf.holds, r.bf.max_deviation, r.sup_error,
                              r.strip_full);
      },
      py::arg("problem"), py::arg("grid_nodes") = 8193, py::arg("tol") = 1e-5,
      py::arg("jobs") = 1);
}
