#include <cstdio>
#include <string>

#include "doctest.h"
#include "hopflax/emit.hpp"
#include "hopflax/problem_file.hpp"
#include "hopflax/util.hpp"

using namespace hopflax;

namespace {

const char* kGood = R"(# demo
[problem]
name = demo
dim = 1
hamiltonian = 0.5*p^2
sigma = -abs(x)
horizon = 1.5
lipschitz = 1

[windows]
x_lo = -3
x_hi = 3

[query]
t_nodes = 9
x_nodes = 33
point = 0.25

[tolerances]
tol = 1e-7
)";

std::string msg_of(const char* text) {
  try {
    parse_problem_text(text, "case.prob");
    return "";
  } catch (const ParseError& e) {
    return e.what();
  } catch (const InputError& e) {
    return e.what();
  }
}

}  // namespace

TEST_CASE("well-formed file populates every section") {
  const ProblemFile pf = parse_problem_text(kGood, "demo.prob");
  CHECK(pf.problem.name() == "demo");
  CHECK(pf.problem.dim() == 1);
  CHECK(pf.problem.horizon() == doctest::Approx(1.5));
  CHECK(pf.problem.window_lo(0) == doctest::Approx(-3.0));
  CHECK(pf.problem.window_hi(0) == doctest::Approx(3.0));
  CHECK_FALSE(pf.problem.terminal());
  CHECK_FALSE(pf.problem.concave());
  CHECK(pf.query.t_nodes == 9);
  CHECK(pf.query.x_nodes == 33);
  REQUIRE(pf.query.point.size() == 1);
  CHECK(pf.query.point[0] == doctest::Approx(0.25));
  CHECK(pf.tolerances.tol == doctest::Approx(1e-7));
  CHECK(pf.query.t_hi == doctest::Approx(1.5));  // defaults to the horizon
}

TEST_CASE("diagnostics carry file, line, and column") {
  const std::string bad_expr = msg_of(
      "[problem]\n"
      "name = t\n"
      "dim = 1\n"
      "hamiltonian = 0.5*p^2 + hug(p)\n"
      "sigma = -abs(x)\n"
      "horizon = 1\n");
  CHECK(bad_expr.find("case.prob:4:") != std::string::npos);

  const std::string bad_number = msg_of(
      "[problem]\n"
      "name = t\n"
      "dim = 1\n"
      "hamiltonian = 0.5*p^2\n"
      "sigma = -abs(x)\n"
      "horizon = soon\n");
  CHECK(bad_number.find("case.prob:6:") != std::string::npos);

  const std::string bad_section = msg_of("[problems]\nname = t\n");
  CHECK(bad_section.find("case.prob:1:") != std::string::npos);
}

TEST_CASE("schema violations are refused") {
  CHECK(msg_of("[problem]\nname = t\ndim = 1\nsigma = x\nhorizon = 1\n")
            .find("hamiltonian") != std::string::npos);
  // both data roles at once
  CHECK(msg_of("[problem]\nname = t\ndim = 1\nhamiltonian = 0.5*p^2\n"
               "sigma = x\nterminal = x\nhorizon = 1\n")
            .empty() == false);
  // duplicate key
  CHECK(msg_of("[problem]\nname = t\nname = u\ndim = 1\n"
               "hamiltonian = 0.5*p^2\nsigma = x\nhorizon = 1\n")
            .find("duplicate") != std::string::npos);
  // unknown key in a known section
  CHECK(msg_of("[problem]\nname = t\ndim = 1\nhamiltonian = 0.5*p^2\n"
               "sigma = x\nhorizon = 1\nflavor = mint\n")
            .empty() == false);
  // dimension out of range
  CHECK(msg_of("[problem]\nname = t\ndim = 3\nhamiltonian = 0.5*p^2\n"
               "sigma = x\nhorizon = 1\n")
            .empty() == false);
}

TEST_CASE("vector query values respect the declared dimension") {
  CHECK(msg_of("[problem]\nname = t\ndim = 1\nhamiltonian = 0.5*p^2\n"
               "sigma = x\nhorizon = 1\n\n[query]\npoint = 1, 2\n")
            .empty() == false);
}

TEST_CASE("numbers print at full precision") {
  CHECK(format_g17(0.1) == "0.10000000000000001");
  CHECK(format_g17(1.0) == "1");
  CHECK(format_g17(-0.5) == "-0.5");
}

TEST_CASE("format names parse and reject") {
  CHECK(parse_format("csv") == Format::Csv);
  CHECK(parse_format("json") == Format::Json);
  CHECK_THROWS_AS(parse_format("yaml"), InputError);
}

TEST_CASE("minimizer table serializes with its summary") {
  MinimizerSet ms;
  ms.dim = 1;
  ms.points = {Minimizer{{-1.0, 0.0}, -0.5}, Minimizer{{1.0, 0.0}, -0.5}};
  ms.value = -0.5;
  ms.epsilon = 1e-6;
  ms.step = 0.001;
  const std::string csv = to_csv(ms);
  CHECK(csv.rfind("y,value\n", 0) == 0);
  CHECK(csv.find("-1,-0.5\n") != std::string::npos);
  CHECK(csv.find("# value=-0.5") != std::string::npos);
  const std::string json = to_json(ms);
  CHECK(json.find("\"value\": -0.5") != std::string::npos);
}

TEST_CASE("solution grids round-trip the node layout") {
  SolutionGrid g;
  g.dim = 1;
  g.t_nodes = {0.5, 1.0};
  g.x_nodes = {-1.0, 0.0, 1.0};
  g.values = {1, 2, 3, 4, 5, 6};
  g.p_t.assign(6, -0.5);
  g.p_x.assign(6, 1.0);
  g.differentiable.assign(6, 1);
  g.status.assign(6, 0);
  const std::string csv = to_csv(g);
  CHECK(csv.rfind("t,x,u,p_t,p_x,differentiable,status\n", 0) == 0);
  // row-major: the second row is (t=0.5, x=0)
  CHECK(csv.find("\n0.5,0,2,") != std::string::npos);
  const std::string json = to_json(g);
  CHECK(json.find("\"values\"") != std::string::npos);
}

TEST_CASE("deterministic output: identical calls give identical bytes") {
  const ProblemFile pf = parse_problem_text(kGood, "demo.prob");
  ConjugateTable table;
  table.z = linspace(-1.0, 1.0, 17);
  for (double z : table.z) {
    double v, a;
    pf.problem.conjugate().value_grad1(z, &v, &a);
    table.value.push_back(v);
    table.arg.push_back(a);
  }
  CHECK(to_csv(table) == to_csv(table));
  CHECK(to_json(table) == to_json(table));
}

TEST_CASE("missing files surface as input errors") {
  CHECK_THROWS_AS(load_problem("/nonexistent/nowhere.prob"), InputError);
  CHECK_THROWS_AS(write_file("/nonexistent/dir/out.csv", "x"), InputError);
}
