#include "hopflax/emit.hpp"

#include <fstream>

#include "hopflax/util.hpp"
#include "json.hpp"

namespace hopflax {

using ordered_json = nlohmann::ordered_json;

namespace {

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::Sup:
      return "sup";
    case Branch::Sub:
      return "sub";
    case Branch::ZeroFallback:
      return "zero";
  }
  return "?";
}

const char* type_name(CurveType t) {
  switch (t) {
    case CurveType::I:
      return "I";
    case CurveType::II:
      return "II";
    case CurveType::NotThrough:
      return "not_through";
  }
  return "?";
}

std::string g17(double v) { return format_g17(v); }

ordered_json point_json(const PointVerdict& v, int dim) {
  ordered_json j;
  j["t"] = v.t;
  j["x"] = v.x[0];
  if (dim == 2) j["x2"] = v.x[1];
  j["differentiable"] = v.differentiable;
  j["sub_margin"] = v.sub_margin;
  j["super_margin"] = v.super_margin;
  j["sub_ok"] = v.sub_ok;
  j["super_ok"] = v.super_ok;
  j["residual"] = v.residual;
  j["unreliable"] = v.unreliable;
  return j;
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw InputError("unknown output format '" + name + "' (csv or json)");
}

std::string to_csv(const SolutionGrid& grid) {
  std::string out = grid.dim == 2
                        ? "t,x,x2,u,p_t,p_x,p_x2,differentiable,status\n"
                        : "t,x,u,p_t,p_x,differentiable,status\n";
  const std::size_t n1 = grid.x_nodes.size();
  const std::size_t n2 = grid.dim == 2 ? grid.x2_nodes.size() : 1;
  for (std::size_t it = 0; it < grid.t_nodes.size(); ++it)
    for (std::size_t j = 0; j < n2; ++j)
      for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t k = (it * n2 + j) * n1 + i;
        out += g17(grid.t_nodes[it]) + "," + g17(grid.x_nodes[i]);
        if (grid.dim == 2) out += "," + g17(grid.x2_nodes[j]);
        out += "," + g17(grid.values[k]) + "," + g17(grid.p_t[k]) + "," +
               g17(grid.p_x[k]);
        if (grid.dim == 2) out += "," + g17(grid.p_x2[k]);
        out += "," + std::to_string(int(grid.differentiable[k])) + "," +
               std::to_string(grid.status[k]) + "\n";
      }
  return out;
}

std::string to_json(const SolutionGrid& grid) {
  ordered_json j;
  j["dim"] = grid.dim;
  j["t_nodes"] = grid.t_nodes;
  j["x_nodes"] = grid.x_nodes;
  if (grid.dim == 2) j["x2_nodes"] = grid.x2_nodes;
  j["values"] = grid.values;
  j["p_t"] = grid.p_t;
  j["p_x"] = grid.p_x;
  if (grid.dim == 2) j["p_x2"] = grid.p_x2;
  j["differentiable"] = grid.differentiable;
  j["status"] = grid.status;
  return j.dump(2) + "\n";
}

std::string to_csv(const MinimizerSet& set) {
  std::string out = set.dim == 2 ? "y,y2,value\n" : "y,value\n";
  for (const Minimizer& m : set.points) {
    out += g17(m.y[0]);
    if (set.dim == 2) out += "," + g17(m.y[1]);
    out += "," + g17(m.value) + "\n";
  }
  out += "# value=" + g17(set.value) + " epsilon=" + g17(set.epsilon) +
         " boundary_regime=" + (set.boundary_regime ? "1" : "0") + "\n";
  return out;
}

std::string to_json(const MinimizerSet& set) {
  ordered_json j;
  j["dim"] = set.dim;
  j["value"] = set.value;
  j["epsilon"] = set.epsilon;
  j["boundary_regime"] = set.boundary_regime;
  ordered_json pts = ordered_json::array();
  for (const Minimizer& m : set.points) {
    ordered_json p;
    p["y"] = m.y[0];
    if (set.dim == 2) p["y2"] = m.y[1];
    p["value"] = m.value;
    pts.push_back(p);
  }
  j["points"] = pts;
  return j.dump(2) + "\n";
}

std::string to_csv(const ConjugateTable& table) {
  std::string out = "z,value,arg\n";
  for (std::size_t i = 0; i < table.z.size(); ++i)
    out += g17(table.z[i]) + "," + g17(table.value[i]) + "," + g17(table.arg[i]) +
           "\n";
  return out;
}

std::string to_json(const ConjugateTable& table) {
  ordered_json j;
  j["z"] = table.z;
  j["value"] = table.value;
  j["arg"] = table.arg;
  return j.dump(2) + "\n";
}

std::string to_csv(const PreimageSet& set) {
  const int dim = set.minimizers.dim;
  std::string out = dim == 2 ? "y,y2,q,q2,type\n" : "y,q,type\n";
  for (const PreimagePoint& p : set.points) {
    out += g17(p.y[0]);
    if (dim == 2) out += "," + g17(p.y[1]);
    out += "," + g17(p.q[0]);
    if (dim == 2) out += "," + g17(p.q[1]);
    out += std::string(",") + (p.type_one ? "I" : "II") + "\n";
  }
  return out;
}

std::string to_json(const PreimageSet& set) {
  const int dim = set.minimizers.dim;
  ordered_json j;
  j["dim"] = dim;
  ordered_json pts = ordered_json::array();
  for (const PreimagePoint& p : set.points) {
    ordered_json e;
    e["y"] = p.y[0];
    if (dim == 2) e["y2"] = p.y[1];
    e["q"] = p.q[0];
    if (dim == 2) e["q2"] = p.q[1];
    e["type"] = p.type_one ? "I" : "II";
    pts.push_back(e);
  }
  j["points"] = pts;
  ordered_json mins = ordered_json::array();
  for (const Minimizer& m : set.minimizers.points) {
    ordered_json e;
    e["y"] = m.y[0];
    if (dim == 2) e["y2"] = m.y[1];
    mins.push_back(e);
  }
  j["minimizers"] = mins;
  j["value"] = set.minimizers.value;
  return j.dump(2) + "\n";
}

std::string to_csv(const std::vector<GradientPair>& pairs) {
  std::string out = "p_t,p_x\n";
  for (const GradientPair& g : pairs)
    out += g17(g.p_t) + "," + g17(g.p[0]) + "\n";
  return out;
}

std::string to_json(const std::vector<GradientPair>& pairs) {
  ordered_json arr = ordered_json::array();
  for (const GradientPair& g : pairs) {
    ordered_json e;
    e["p_t"] = g.p_t;
    e["p_x"] = g.p[0];
    arr.push_back(e);
  }
  ordered_json j;
  j["pairs"] = arr;
  return j.dump(2) + "\n";
}

std::string to_csv(const Characteristic& curve, const ClassifyAlongReport& report) {
  std::string out = "# origin=" + g17(curve.origin[0]) +
                    " slope=" + g17(curve.slope[0]) +
                    " velocity=" + g17(curve.velocity[0]) +
                    " branch=" + branch_name(curve.branch) + "\n";
  out += "t,x,type,clean\n";
  for (std::size_t i = 0; i < report.times.size(); ++i) {
    const double t = report.times[i];
    out += g17(t) + "," + g17(curve.at(t)[0]) + "," + type_name(report.types[i]) +
           "," + std::to_string(int(report.clean[i])) + "\n";
  }
  out += "# theta_lo=" + g17(report.theta_lo) + " theta_hi=" + g17(report.theta_hi) +
         " any_type_one=" + (report.any_type_one ? "1" : "0") +
         " non_monotone=" + (report.non_monotone ? "1" : "0") +
         " persistence_violations=" + std::to_string(report.persistence_violations) +
         "\n";
  return out;
}

std::string to_json(const Characteristic& curve, const ClassifyAlongReport& report) {
  ordered_json j;
  j["origin"] = curve.origin[0];
  j["slope"] = curve.slope[0];
  j["velocity"] = curve.velocity[0];
  j["branch"] = branch_name(curve.branch);
  j["times"] = report.times;
  ordered_json types = ordered_json::array();
  for (CurveType t : report.types) types.push_back(type_name(t));
  j["types"] = types;
  ordered_json clean = ordered_json::array();
  for (char c : report.clean) clean.push_back(bool(c));
  j["clean"] = clean;
  j["any_type_one"] = report.any_type_one;
  j["theta_lo"] = report.theta_lo;
  j["theta_hi"] = report.theta_hi;
  j["persistence_violations"] = report.persistence_violations;
  j["non_monotone"] = report.non_monotone;
  return j.dump(2) + "\n";
}

std::string to_csv(const StripReport& report) {
  std::string out = "t,plane_ok\n";
  for (std::size_t i = 0; i < report.times.size(); ++i)
    out += g17(report.times[i]) + "," + std::to_string(int(report.plane_ok[i])) + "\n";
  out += "# t_star_numeric=" + g17(report.t_star_numeric) +
         " t_star_bound=" + g17(report.t_star_bound) +
         " bound_applicable=" + (report.bound_applicable ? "1" : "0") +
         " theta=" + g17(report.params.theta) + " B=" + g17(report.params.B) + "\n";
  for (const StripReport::Failure& f : report.failures)
    out += "# failure t=" + g17(f.t) + " x=" + g17(f.x) + "\n";
  return out;
}

std::string to_json(const StripReport& report) {
  ordered_json j;
  j["times"] = report.times;
  ordered_json ok = ordered_json::array();
  for (char c : report.plane_ok) ok.push_back(bool(c));
  j["plane_ok"] = ok;
  j["t_star_numeric"] = report.t_star_numeric;
  j["t_star_bound"] = report.t_star_bound;
  j["bound_applicable"] = report.bound_applicable;
  j["theta"] = report.params.theta;
  j["B"] = report.params.B;
  j["horizon"] = report.params.T;
  ordered_json fails = ordered_json::array();
  for (const StripReport::Failure& f : report.failures) {
    ordered_json e;
    e["t"] = f.t;
    e["x"] = f.x;
    fails.push_back(e);
  }
  j["failures"] = fails;
  return j.dump(2) + "\n";
}

std::string to_csv(const RegionVerdict& verdict) {
  std::string out = "field,value\n";
  out += "pass," + std::string(verdict.pass ? "1" : "0") + "\n";
  out += "subsolution," + std::string(verdict.subsolution ? "1" : "0") + "\n";
  out += "supersolution," + std::string(verdict.supersolution ? "1" : "0") + "\n";
  out += "tol," + g17(verdict.tol) + "\n";
  out += "worst_sub," + g17(verdict.worst_sub) + "\n";
  out += "worst_sub_t," + g17(verdict.worst_sub_point.t) + "\n";
  out += "worst_sub_x," + g17(verdict.worst_sub_point.x[0]) + "\n";
  out += "worst_super," + g17(verdict.worst_super) + "\n";
  out += "worst_super_t," + g17(verdict.worst_super_point.t) + "\n";
  out += "worst_super_x," + g17(verdict.worst_super_point.x[0]) + "\n";
  out += "residual_max," + g17(verdict.residual_max) + "\n";
  out += "nodes," + std::to_string(verdict.nodes) + "\n";
  out += "kink_nodes," + std::to_string(verdict.kink_nodes) + "\n";
  out += "unreliable_nodes," + std::to_string(verdict.unreliable_nodes) + "\n";
  for (const TraceSample& s : verdict.initial_trace)
    out += "initial_trace_dev(t=" + g17(s.t) + ")," + g17(s.sup_dev) + "\n";
  return out;
}

std::string to_json(const RegionVerdict& verdict) {
  ordered_json j;
  j["pass"] = verdict.pass;
  j["subsolution"] = verdict.subsolution;
  j["supersolution"] = verdict.supersolution;
  j["tol"] = verdict.tol;
  j["worst_sub"] = verdict.worst_sub;
  j["worst_sub_point"] = point_json(verdict.worst_sub_point, 1);
  j["worst_super"] = verdict.worst_super;
  j["worst_super_point"] = point_json(verdict.worst_super_point, 1);
  j["residual_max"] = verdict.residual_max;
  j["nodes"] = verdict.nodes;
  j["kink_nodes"] = verdict.kink_nodes;
  j["unreliable_nodes"] = verdict.unreliable_nodes;
  ordered_json fails = ordered_json::array();
  for (const PointVerdict& f : verdict.failures) fails.push_back(point_json(f, 1));
  j["failures"] = fails;
  ordered_json trace = ordered_json::array();
  for (const TraceSample& s : verdict.initial_trace) {
    ordered_json e;
    e["t"] = s.t;
    e["sup_dev"] = s.sup_dev;
    e["bound"] = s.bound;
    e["ok"] = s.ok;
    trace.push_back(e);
  }
  j["initial_trace"] = trace;
  return j.dump(2) + "\n";
}

std::string to_csv(const SemigroupReport& report) {
  std::string out = "field,value\n";
  out += "direct," + g17(report.direct) + "\n";
  out += "nested," + g17(report.nested) + "\n";
  out += "residual," + g17(report.residual) + "\n";
  out += "inner_argmin," + g17(report.inner_argmin) + "\n";
  return out;
}

std::string to_json(const SemigroupReport& report) {
  ordered_json j;
  j["direct"] = report.direct;
  j["nested"] = report.nested;
  j["residual"] = report.residual;
  j["inner_argmin"] = report.inner_argmin;
  return j.dump(2) + "\n";
}

std::string to_csv(const BfReport& report) {
  std::string out = "x,deviation\n";
  for (std::size_t i = 0; i < report.x.size(); ++i)
    out += g17(report.x[i]) + "," + g17(report.deviation[i]) + "\n";
  out += "# holds=" + std::string(report.holds ? "1" : "0") +
         " max_deviation=" + g17(report.max_deviation) +
         " worst_x=" + g17(report.worst_x) + " tol=" + g17(report.tol) + "\n";
  return out;
}

std::string to_json(const BfReport& report) {
  ordered_json j;
  j["holds"] = report.holds;
  j["max_deviation"] = report.max_deviation;
  j["tol"] = report.tol;
  j["worst_x"] = report.worst_x;
  j["x"] = report.x;
  j["deviation"] = report.deviation;
  return j.dump(2) + "\n";
}

std::string to_csv(const RoundtripReport& report) {
  std::string out = to_csv(report.bf);
  out += "# sup_error=" + g17(report.sup_error) + " worst_x=" + g17(report.worst_x) +
         " equality_error=" + g17(report.equality_error) +
         " strip_full=" + (report.strip_full ? "1" : "0") +
         " t_star_numeric=" + g17(report.t_star_numeric) +
         " within_theorem=" + (report.within_theorem ? "1" : "0") + "\n";
  return out;
}

std::string to_json(const RoundtripReport& report) {
  ordered_json j;
  j["holds"] = report.holds;
  j["bf"] = ordered_json::parse(to_json(report.bf));
  j["sup_error"] = report.sup_error;
  j["worst_x"] = report.worst_x;
  j["equality_error"] = report.equality_error;
  j["strip_full"] = report.strip_full;
  j["t_star_numeric"] = report.t_star_numeric;
  j["within_theorem"] = report.within_theorem;
  return j.dump(2) + "\n";
}

std::string curve_family_csv(const std::vector<Characteristic>& curves,
                             const std::vector<double>& times) {
  std::string out;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Characteristic& c = curves[k];
    if (k) out += "\n";
    out += "# curve " + std::to_string(k) + ": origin=" + g17(c.origin[0]);
    if (c.dim == 2) out += "," + g17(c.origin[1]);
    out += " slope=" + g17(c.slope[0]);
    if (c.dim == 2) out += "," + g17(c.slope[1]);
    out += std::string(" branch=") + branch_name(c.branch) + "\n";
    out += c.dim == 2 ? "t,x,x2\n" : "t,x\n";
    for (double t : times) {
      const std::array<double, 2> x = c.at(t);
      out += g17(t) + "," + g17(x[0]);
      if (c.dim == 2) out += "," + g17(x[1]);
      out += "\n";
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open output file: " + path);
  out << content;
  if (!out) throw InputError("failed writing output file: " + path);
}

}  // namespace hopflax
