#include "hopflax/problem_file.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "hopflax/util.hpp"

namespace hopflax {

namespace {

struct RawValue {
  std::string text;
  int line = 0;
  std::size_t column = 0;  // 1-based column of the value start
  std::size_t offset = 0;  // byte offset of the value start
};

struct RawFile {
  std::string origin;
  std::map<std::string, RawValue> entries;  // "section.key"
};

[[noreturn]] void fail_at(const RawFile& raw, int line, std::size_t column,
                          std::size_t offset, const std::string& msg) {
  throw ParseError(raw.origin + ":" + std::to_string(line) + ":" +
                       std::to_string(column) + ": " + msg,
                   offset);
}

[[noreturn]] void fail_value(const RawFile& raw, const RawValue& v,
                             const std::string& msg) {
  fail_at(raw, v.line, v.column, v.offset, msg);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::vector<std::string>> kSchema = {
    {"problem",
     {"name", "dim", "hamiltonian", "sigma", "terminal", "horizon", "concave",
      "lipschitz"}},
    {"windows", {"x_lo", "x_hi", "x2_lo", "x2_hi", "t_lo", "t_hi"}},
    {"query",
     {"t_nodes", "x_nodes", "x2_nodes", "point", "origin", "slope", "times"}},
    {"tolerances", {"tol", "resolution", "bf_tol"}},
};

RawFile scan_lines(const std::string& text, const std::string& origin) {
  RawFile raw;
  raw.origin = origin;
  std::string section;
  int line_no = 0;
  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos) line_end = text.size();
    std::string line = text.substr(line_start, line_end - line_start);
    ++line_no;

    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (!body.empty()) {
      if (body.front() == '[') {
        if (body.back() != ']')
          fail_at(raw, line_no, 1, line_start, "unterminated section header");
        section = trim(body.substr(1, body.size() - 2));
        if (!kSchema.count(section))
          fail_at(raw, line_no, 1, line_start, "unknown section [" + section + "]");
      } else {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || section.empty())
          fail_at(raw, line_no, 1, line_start,
                  section.empty() ? "entry before any [section]"
                                  : "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const auto& allowed = kSchema.at(section);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
          fail_at(raw, line_no, 1, line_start,
                  "unknown key '" + key + "' in [" + section + "]");
        RawValue v;
        std::size_t val_begin = eq + 1;
        while (val_begin < line.size() &&
               (line[val_begin] == ' ' || line[val_begin] == '\t'))
          ++val_begin;
        v.text = trim(line.substr(eq + 1));
        v.line = line_no;
        v.column = val_begin + 1;
        v.offset = line_start + val_begin;
        if (raw.entries.count(section + "." + key))
          fail_at(raw, line_no, 1, line_start,
                  "duplicate key '" + key + "' in [" + section + "]");
        raw.entries[section + "." + key] = v;
      }
    }
    if (line_end == text.size()) break;
    line_start = line_end + 1;
  }
  return raw;
}

const RawValue* find(const RawFile& raw, const std::string& path) {
  auto it = raw.entries.find(path);
  return it == raw.entries.end() ? nullptr : &it->second;
}

double parse_number(const RawFile& raw, const RawValue& v) {
  const char* begin = v.text.c_str();
  char* end = nullptr;
  const double out = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    fail_value(raw, v, "expected a number, got '" + v.text + "'");
  return out;
}

int parse_int(const RawFile& raw, const RawValue& v) {
  const double d = parse_number(raw, v);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    fail_value(raw, v, "expected an integer, got '" + v.text + "'");
  return i;
}

bool parse_bool(const RawFile& raw, const RawValue& v) {
  if (v.text == "true" || v.text == "1") return true;
  if (v.text == "false" || v.text == "0") return false;
  fail_value(raw, v, "expected true or false, got '" + v.text + "'");
}

std::vector<double> parse_list(const RawFile& raw, const RawValue& v) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= v.text.size()) {
    std::size_t comma = v.text.find(',', pos);
    if (comma == std::string::npos) comma = v.text.size();
    RawValue item = v;
    item.text = trim(v.text.substr(pos, comma - pos));
    item.column += pos;
    item.offset += pos;
    if (item.text.empty()) fail_value(raw, item, "empty list entry");
    out.push_back(parse_number(raw, item));
    if (comma == v.text.size()) break;
    pos = comma + 1;
  }
  return out;
}

Expression parse_expr(const RawFile& raw, const RawValue& v, int dim) {
  try {
    return Expression::parse(v.text, dim);
  } catch (const ParseError& e) {
    // re-anchor the in-expression offset onto the file position
    const std::string what = e.what();
    const std::size_t cut = what.rfind(" (at offset ");
    fail_at(raw, v.line, v.column + e.offset(), v.offset + e.offset(),
            cut == std::string::npos ? what : what.substr(0, cut));
  }
}

}  // namespace

ProblemFile parse_problem_text(const std::string& text, const std::string& origin) {
  const RawFile raw = scan_lines(text, origin);

  int dim = 1;
  if (const RawValue* v = find(raw, "problem.dim")) {
    dim = parse_int(raw, *v);
    if (dim != 1 && dim != 2) fail_value(raw, *v, "dim must be 1 or 2");
  }

  const RawValue* ham = find(raw, "problem.hamiltonian");
  if (!ham) throw ParseError(origin + ": missing [problem] hamiltonian", 0);
  const RawValue* sigma = find(raw, "problem.sigma");
  const RawValue* terminal = find(raw, "problem.terminal");
  if (!!sigma == !!terminal)
    throw ParseError(origin + ": give exactly one of sigma (initial) or terminal",
                     0);

  Problem::Config cfg;
  cfg.hamiltonian = parse_expr(raw, *ham, dim);
  cfg.data = ScalarFunction::from_expression(
      parse_expr(raw, sigma ? *sigma : *terminal, dim));
  cfg.terminal = terminal != nullptr;
  if (const RawValue* v = find(raw, "problem.name")) cfg.name = v->text;
  if (const RawValue* v = find(raw, "problem.horizon"))
    cfg.horizon = parse_number(raw, *v);
  if (const RawValue* v = find(raw, "problem.concave"))
    cfg.concave = parse_bool(raw, *v);
  if (const RawValue* v = find(raw, "problem.lipschitz"))
    cfg.lipschitz_hint = parse_number(raw, *v);

  if (const RawValue* v = find(raw, "windows.x_lo"))
    cfg.window_lo[0] = parse_number(raw, *v);
  if (const RawValue* v = find(raw, "windows.x_hi"))
    cfg.window_hi[0] = parse_number(raw, *v);
  if (const RawValue* v = find(raw, "windows.x2_lo"))
    cfg.window_lo[1] = parse_number(raw, *v);
  if (const RawValue* v = find(raw, "windows.x2_hi"))
    cfg.window_hi[1] = parse_number(raw, *v);

  ProblemFile out{Problem::make(std::move(cfg)), {}, {}};

  out.query.t_hi = out.problem.horizon();
  if (const RawValue* v = find(raw, "windows.t_lo"))
    out.query.t_lo = parse_number(raw, *v);
  if (const RawValue* v = find(raw, "windows.t_hi"))
    out.query.t_hi = parse_number(raw, *v);
  if (const RawValue* v = find(raw, "query.t_nodes"))
    out.query.t_nodes = parse_int(raw, *v);
  if (const RawValue* v = find(raw, "query.x_nodes"))
    out.query.x_nodes = parse_int(raw, *v);
  if (const RawValue* v = find(raw, "query.x2_nodes"))
    out.query.x2_nodes = parse_int(raw, *v);
  if (out.query.x2_nodes == 0) out.query.x2_nodes = out.query.x_nodes;
  if (const RawValue* v = find(raw, "query.point"))
    out.query.point = parse_list(raw, *v);
  if (const RawValue* v = find(raw, "query.origin"))
    out.query.origin = parse_list(raw, *v);
  if (const RawValue* v = find(raw, "query.slope"))
    out.query.slope = parse_list(raw, *v);
  if (const RawValue* v = find(raw, "query.times"))
    out.query.times = parse_list(raw, *v);

  if (const RawValue* v = find(raw, "tolerances.tol"))
    out.tolerances.tol = parse_number(raw, *v);
  if (const RawValue* v = find(raw, "tolerances.resolution"))
    out.tolerances.resolution = parse_int(raw, *v);
  if (const RawValue* v = find(raw, "tolerances.bf_tol"))
    out.tolerances.bf_tol = parse_number(raw, *v);

  for (const auto& [path, v] : raw.entries) {
    const bool point_like = path == "query.point" || path == "query.origin" ||
                            path == "query.slope";
    if (point_like) {
      const auto& list = path == "query.point"    ? out.query.point
                         : path == "query.origin" ? out.query.origin
                                                  : out.query.slope;
      if (static_cast<int>(list.size()) != dim)
        fail_value(raw, v, path.substr(6) + " needs " + std::to_string(dim) +
                               " coordinate(s)");
    }
  }
  return out;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open problem file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str(), path);
}

}  // namespace hopflax
