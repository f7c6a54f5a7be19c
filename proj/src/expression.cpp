#include "hopflax/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

#include "hopflax/util.hpp"

namespace hopflax {

namespace {

constexpr double kTieTol = 1e-12;   // branch ties in min/max and |.| kinks
constexpr int kSmallTree = 96;

int precedence(Expression::Op op) {
  using Op = Expression::Op;
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

}  // namespace

// ---------------------------------------------------------------- parsing

class ExprParser {
 public:
  ExprParser(std::string_view s, int dim) : s_(s), dim_(dim) {
    out_.dim_ = dim;
    if (dim != 1 && dim != 2) throw InputError("dimension must be 1 or 2");
  }

  Expression run() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    const int root = parse_expr();
    skip_ws();
    if (pos_ < s_.size()) throw ParseError("trailing input", pos_);
    (void)root;
    return std::move(out_);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int dim_;
  Expression out_;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "' " + what, pos_);
  }

  int add_node(Expression::Node n) {
    out_.nodes_.push_back(std::move(n));
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int add_unary(Expression::Op op, int kid) {
    Expression::Node n;
    n.op = op;
    n.kids = {kid};
    return add_node(std::move(n));
  }

  int add_binary(Expression::Op op, int l, int r) {
    Expression::Node n;
    n.op = op;
    n.kids = {l, r};
    return add_node(std::move(n));
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = add_binary(Expression::Op::Add, lhs, parse_term());
      else if (accept('-')) lhs = add_binary(Expression::Op::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = add_binary(Expression::Op::Mul, lhs, parse_unary());
      else if (accept('/')) lhs = add_binary(Expression::Op::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  int parse_unary() {
    if (accept('-')) return add_unary(Expression::Op::Neg, parse_unary());
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    skip_ws();
    if (!accept('^')) return base;
    const std::size_t mark_nodes = out_.nodes_.size();
    const std::size_t mark_pos = pos_;
    const int exp_root = parse_unary();
    double e = 0.0;
    if (!fold_from(exp_root, &e))
      throw ParseError("exponent must be a constant", mark_pos);
    out_.nodes_.resize(mark_nodes);  // exponent subtree is folded away
    Expression::Node n;
    n.op = Expression::Op::Pow;
    n.num = e;
    n.int_exponent = std::abs(e - std::round(e)) <= 1e-12 && std::abs(e) < 1e15;
    if (n.int_exponent) n.num = std::round(e);
    n.kids = {base};
    return add_node(std::move(n));
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (accept('(')) {
      const int inner = parse_expr();
      expect(')', "to close group");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  int parse_number() {
    double v = 0.0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p == first) throw ParseError("malformed number", pos_);
    pos_ = static_cast<std::size_t>(p - s_.data());
    Expression::Node n;
    n.op = Expression::Op::Num;
    n.num = v;
    return add_node(std::move(n));
  }

  int make_var(int index, std::size_t off, bool pq_style) {
    if (index >= dim_)
      throw ParseError("variable not available in dimension " + std::to_string(dim_), off);
    if (pq_style) out_.pq_names_ = true;
    Expression::Node n;
    n.op = Expression::Op::Var;
    n.var = index;
    return add_node(std::move(n));
  }

  int parse_ident() {
    const std::size_t off = pos_;
    std::size_t end = pos_;
    while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) ++end;
    const std::string_view id = s_.substr(pos_, end - pos_);
    pos_ = end;
    if (id == "x") return make_var(0, off, false);
    if (id == "p") return make_var(0, off, true);
    if (id == "y") return make_var(1, off, false);
    if (id == "q") return make_var(1, off, true);
    if (id == "abs") return parse_call_1(Expression::Op::Abs);
    if (id == "sin") return parse_call_1(Expression::Op::Sin);
    if (id == "cos") return parse_call_1(Expression::Op::Cos);
    if (id == "sqrt") return parse_call_1(Expression::Op::Sqrt);
    if (id == "min") return parse_call_n(Expression::Op::Min);
    if (id == "max") return parse_call_n(Expression::Op::Max);
    if (id == "piecewise") return parse_piecewise(off);
    throw ParseError("unknown identifier '" + std::string(id) + "'", off);
  }

  int parse_call_1(Expression::Op op) {
    expect('(', "after function name");
    const int arg = parse_expr();
    expect(')', "to close call");
    return add_unary(op, arg);
  }

  int parse_call_n(Expression::Op op) {
    expect('(', "after function name");
    std::vector<int> args;
    args.push_back(parse_expr());
    while (accept(',')) args.push_back(parse_expr());
    expect(')', "to close call");
    if (args.size() < 2) throw ParseError("min/max need at least two arguments", pos_);
    Expression::Node n;
    n.op = op;
    n.kids = std::move(args);
    return add_node(std::move(n));
  }

  // piecewise(e0 | b1 | e1 | ... | bk | ek), breakpoints strictly increasing
  int parse_piecewise(std::size_t off) {
    if (dim_ != 1) throw ParseError("piecewise requires dimension 1", off);
    expect('(', "after piecewise");
    std::vector<int> pieces;
    std::vector<double> breaks;
    pieces.push_back(parse_expr());
    while (accept('|')) {
      const std::size_t mark_nodes = out_.nodes_.size();
      const std::size_t bpos = pos_;
      const int broot = parse_expr();
      double b = 0.0;
      if (!fold_from(broot, &b)) throw ParseError("breakpoint must be a constant", bpos);
      out_.nodes_.resize(mark_nodes);
      if (!breaks.empty() && b <= breaks.back())
        throw ParseError("breakpoints must increase strictly", bpos);
      breaks.push_back(b);
      expect('|', "after breakpoint");
      pieces.push_back(parse_expr());
    }
    expect(')', "to close piecewise");
    if (breaks.empty()) throw ParseError("piecewise needs at least two pieces", off);
    Expression::Node n;
    n.op = Expression::Op::Piecewise;
    n.kids = std::move(pieces);
    n.consts = std::move(breaks);
    return add_node(std::move(n));
  }

  bool fold_from(int root, double* out) const {
    std::vector<double> vals(out_.nodes_.size());
    std::vector<char> ok(out_.nodes_.size(), 0);
    for (int i = 0; i <= root; ++i) {
      const auto& n = out_.nodes_[static_cast<std::size_t>(i)];
      using Op = Expression::Op;
      auto kid_ok = [&](int k) { return ok[static_cast<std::size_t>(k)] != 0; };
      auto kv = [&](int k) { return vals[static_cast<std::size_t>(k)]; };
      double v = 0.0;
      bool good = true;
      switch (n.op) {
        case Op::Num: v = n.num; break;
        case Op::Var: good = false; break;
        case Op::Neg: good = kid_ok(n.kids[0]); v = -kv(n.kids[0]); break;
        case Op::Abs: good = kid_ok(n.kids[0]); v = std::abs(kv(n.kids[0])); break;
        case Op::Sin: good = kid_ok(n.kids[0]); v = std::sin(kv(n.kids[0])); break;
        case Op::Cos: good = kid_ok(n.kids[0]); v = std::cos(kv(n.kids[0])); break;
        case Op::Sqrt: good = kid_ok(n.kids[0]); v = std::sqrt(kv(n.kids[0])); break;
        case Op::Add: good = kid_ok(n.kids[0]) && kid_ok(n.kids[1]); v = kv(n.kids[0]) + kv(n.kids[1]); break;
        case Op::Sub: good = kid_ok(n.kids[0]) && kid_ok(n.kids[1]); v = kv(n.kids[0]) - kv(n.kids[1]); break;
        case Op::Mul: good = kid_ok(n.kids[0]) && kid_ok(n.kids[1]); v = kv(n.kids[0]) * kv(n.kids[1]); break;
        case Op::Div: good = kid_ok(n.kids[0]) && kid_ok(n.kids[1]); v = kv(n.kids[0]) / kv(n.kids[1]); break;
        case Op::Pow: good = kid_ok(n.kids[0]); v = std::pow(kv(n.kids[0]), n.num); break;
        case Op::Min:
        case Op::Max: {
          v = kv(n.kids[0]);
          for (int k : n.kids) {
            good = good && kid_ok(k);
            v = n.op == Op::Min ? std::min(v, kv(k)) : std::max(v, kv(k));
          }
          break;
        }
        case Op::Piecewise: good = false; break;
      }
      ok[static_cast<std::size_t>(i)] = good ? 1 : 0;
      vals[static_cast<std::size_t>(i)] = v;
    }
    if (!ok[static_cast<std::size_t>(root)]) return false;
    *out = vals[static_cast<std::size_t>(root)];
    return true;
  }
};

Expression Expression::parse(std::string_view text, int dimension) {
  return ExprParser(text, dimension).run();
}

Expression Expression::constant(double v) {
  Expression e;
  Node n;
  n.op = Op::Num;
  n.num = v;
  e.nodes_.push_back(std::move(n));
  e.dim_ = 1;
  return e;
}

// ------------------------------------------------------------- evaluation

namespace {

inline int piecewise_index(const Expression::Node& n, double x, int side) {
  const auto& b = n.consts;
  // side-aware selection at breakpoints; interior pieces own [b_i, b_{i+1})
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (std::abs(x - b[j]) <= kTieTol * (1.0 + std::abs(x)))
      return side < 0 ? static_cast<int>(j) : static_cast<int>(j) + 1;
  }
  return static_cast<int>(std::upper_bound(b.begin(), b.end(), x) - b.begin());
}

}  // namespace

double Expression::eval(std::span<const double> pt) const {
  if (empty()) throw InputError("empty expression");
  double small[kSmallTree];
  std::vector<double> heap;
  double* vals = nullptr;
  if (nodes_.size() <= kSmallTree) {
    vals = small;
  } else {
    heap.resize(nodes_.size());
    vals = heap.data();
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    double v = 0.0;
    switch (n.op) {
      case Op::Num: v = n.num; break;
      case Op::Var: v = pt[static_cast<std::size_t>(n.var)]; break;
      case Op::Neg: v = -vals[n.kids[0]]; break;
      case Op::Abs: v = std::abs(vals[n.kids[0]]); break;
      case Op::Sin: v = std::sin(vals[n.kids[0]]); break;
      case Op::Cos: v = std::cos(vals[n.kids[0]]); break;
      case Op::Sqrt: v = std::sqrt(vals[n.kids[0]]); break;
      case Op::Add: v = vals[n.kids[0]] + vals[n.kids[1]]; break;
      case Op::Sub: v = vals[n.kids[0]] - vals[n.kids[1]]; break;
      case Op::Mul: v = vals[n.kids[0]] * vals[n.kids[1]]; break;
      case Op::Div: v = vals[n.kids[0]] / vals[n.kids[1]]; break;
      case Op::Pow: v = std::pow(vals[n.kids[0]], n.num); break;
      case Op::Min: {
        v = vals[n.kids[0]];
        for (int k : n.kids) v = std::min(v, vals[k]);
        break;
      }
      case Op::Max: {
        v = vals[n.kids[0]];
        for (int k : n.kids) v = std::max(v, vals[k]);
        break;
      }
      case Op::Piecewise:
        v = vals[n.kids[static_cast<std::size_t>(piecewise_index(n, pt[0], +1))]];
        break;
    }
    vals[i] = v;
  }
  return vals[nodes_.size() - 1];
}

double Expression::deriv(std::span<const double> pt, int axis, int side) const {
  if (empty()) throw InputError("empty expression");
  if (side != 1 && side != -1) throw InputError("side must be +1 or -1");
  std::vector<double> vals(nodes_.size()), ders(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    double v = 0.0, d = 0.0;
    auto kv = [&](int k) { return vals[static_cast<std::size_t>(k)]; };
    auto kd = [&](int k) { return ders[static_cast<std::size_t>(k)]; };
    switch (n.op) {
      case Op::Num: v = n.num; break;
      case Op::Var:
        v = pt[static_cast<std::size_t>(n.var)];
        d = n.var == axis ? 1.0 : 0.0;
        break;
      case Op::Neg: v = -kv(n.kids[0]); d = -kd(n.kids[0]); break;
      case Op::Abs: {
        const double u = kv(n.kids[0]), du = kd(n.kids[0]);
        v = std::abs(u);
        if (u > kTieTol) d = du;
        else if (u < -kTieTol) d = -du;
        else d = side > 0 ? std::abs(du) : -std::abs(du);
        break;
      }
      case Op::Sin: v = std::sin(kv(n.kids[0])); d = std::cos(kv(n.kids[0])) * kd(n.kids[0]); break;
      case Op::Cos: v = std::cos(kv(n.kids[0])); d = -std::sin(kv(n.kids[0])) * kd(n.kids[0]); break;
      case Op::Sqrt: {
        const double u = kv(n.kids[0]);
        v = std::sqrt(u);
        d = kd(n.kids[0]) / (2.0 * v);
        break;
      }
      case Op::Add: v = kv(n.kids[0]) + kv(n.kids[1]); d = kd(n.kids[0]) + kd(n.kids[1]); break;
      case Op::Sub: v = kv(n.kids[0]) - kv(n.kids[1]); d = kd(n.kids[0]) - kd(n.kids[1]); break;
      case Op::Mul: {
        const double a = kv(n.kids[0]), b = kv(n.kids[1]);
        v = a * b;
        d = kd(n.kids[0]) * b + a * kd(n.kids[1]);
        break;
      }
      case Op::Div: {
        const double a = kv(n.kids[0]), b = kv(n.kids[1]);
        v = a / b;
        d = (kd(n.kids[0]) * b - a * kd(n.kids[1])) / (b * b);
        break;
      }
      case Op::Pow: {
        const double u = kv(n.kids[0]);
        v = std::pow(u, n.num);
        d = n.num * std::pow(u, n.num - 1.0) * kd(n.kids[0]);
        if (n.num > 1.0 && u == 0.0) d = 0.0;
        break;
      }
      case Op::Min:
      case Op::Max: {
        const bool is_min = n.op == Op::Min;
        v = kv(n.kids[0]);
        for (int k : n.kids) v = is_min ? std::min(v, kv(k)) : std::max(v, kv(k));
        bool first = true;
        for (int k : n.kids) {
          if (std::abs(kv(k) - v) > kTieTol * (1.0 + std::abs(v))) continue;
          const double cand = kd(k);
          if (first) {
            d = cand;
            first = false;
            continue;
          }
          // to the right the smaller slope wins a min; mirrored on the left
          if (is_min) d = side > 0 ? std::min(d, cand) : std::max(d, cand);
          else d = side > 0 ? std::max(d, cand) : std::min(d, cand);
        }
        break;
      }
      case Op::Piecewise: {
        const int j = piecewise_index(n, pt[0], axis == 0 ? side : +1);
        v = kv(n.kids[static_cast<std::size_t>(j)]);
        d = kd(n.kids[static_cast<std::size_t>(j)]);
        break;
      }
    }
    vals[i] = v;
    ders[i] = d;
  }
  return ders[nodes_.size() - 1];
}

// ---------------------------------------------------------------- printing

namespace {

void print_node(const std::vector<Expression::Node>& nodes, int i, bool pq,
                std::string& out);

void print_child(const std::vector<Expression::Node>& nodes, int kid, bool pq,
                 int min_prec, std::string& out) {
  const bool wrap = precedence(nodes[static_cast<std::size_t>(kid)].op) < min_prec;
  if (wrap) out += '(';
  print_node(nodes, kid, pq, out);
  if (wrap) out += ')';
}

void print_node(const std::vector<Expression::Node>& nodes, int i, bool pq,
                std::string& out) {
  const auto& n = nodes[static_cast<std::size_t>(i)];
  using Op = Expression::Op;
  switch (n.op) {
    case Op::Num: out += format_g17(n.num); break;
    case Op::Var: out += n.var == 0 ? (pq ? "p" : "x") : (pq ? "q" : "y"); break;
    case Op::Neg:
      out += '-';
      print_child(nodes, n.kids[0], pq, 3, out);
      break;
    case Op::Abs:
    case Op::Sin:
    case Op::Cos:
    case Op::Sqrt: {
      out += n.op == Op::Abs ? "abs" : n.op == Op::Sin ? "sin"
             : n.op == Op::Cos ? "cos" : "sqrt";
      out += '(';
      print_node(nodes, n.kids[0], pq, out);
      out += ')';
      break;
    }
    case Op::Add:
    case Op::Sub:
      print_child(nodes, n.kids[0], pq, 1, out);
      out += n.op == Op::Add ? " + " : " - ";
      print_child(nodes, n.kids[1], pq, 2, out);
      break;
    case Op::Mul:
    case Op::Div:
      print_child(nodes, n.kids[0], pq, 2, out);
      out += n.op == Op::Mul ? " * " : " / ";
      print_child(nodes, n.kids[1], pq, 3, out);
      break;
    case Op::Pow:
      print_child(nodes, n.kids[0], pq, 5, out);
      out += " ^ ";
      out += format_g17(n.num);
      break;
    case Op::Min:
    case Op::Max: {
      out += n.op == Op::Min ? "min(" : "max(";
      for (std::size_t k = 0; k < n.kids.size(); ++k) {
        if (k) out += ", ";
        print_node(nodes, n.kids[k], pq, out);
      }
      out += ')';
      break;
    }
    case Op::Piecewise: {
      out += "piecewise(";
      for (std::size_t k = 0; k < n.kids.size(); ++k) {
        if (k) {
          out += " | ";
          out += format_g17(n.consts[k - 1]);
          out += " | ";
        }
        print_node(nodes, n.kids[k], pq, out);
      }
      out += ')';
      break;
    }
  }
}

}  // namespace

std::string Expression::str() const {
  if (empty()) return "";
  std::string out;
  print_node(nodes_, static_cast<int>(nodes_.size()) - 1, pq_names_, out);
  return out;
}

bool Expression::constant_value(double* out) const {
  if (empty()) return false;
  for (const Node& n : nodes_)
    if (n.op == Op::Var || n.op == Op::Piecewise) return false;
  const double pt[2] = {0.0, 0.0};
  *out = eval(std::span<const double>(pt, static_cast<std::size_t>(dim_)));
  return true;
}

// --------------------------------------------------------- kink extraction

std::vector<double> Expression::kink_candidates(double lo, double hi, int scan) const {
  if (dim_ != 1) throw InputError("kink extraction needs a 1-D expression");
  if (!(hi > lo)) return {};
  std::vector<double> found;

  // one full-table evaluation per sample; prev/cur rows track every subtree
  const std::size_t nn = nodes_.size();
  std::vector<double> prev(nn), cur(nn);
  auto eval_all = [&](double x, std::vector<double>& row) {
    for (std::size_t i = 0; i < nn; ++i) {
      const Node& n = nodes_[i];
      double v = 0.0;
      switch (n.op) {
        case Op::Num: v = n.num; break;
        case Op::Var: v = x; break;
        case Op::Neg: v = -row[static_cast<std::size_t>(n.kids[0])]; break;
        case Op::Abs: v = std::abs(row[static_cast<std::size_t>(n.kids[0])]); break;
        case Op::Sin: v = std::sin(row[static_cast<std::size_t>(n.kids[0])]); break;
        case Op::Cos: v = std::cos(row[static_cast<std::size_t>(n.kids[0])]); break;
        case Op::Sqrt: v = std::sqrt(row[static_cast<std::size_t>(n.kids[0])]); break;
        case Op::Add: v = row[static_cast<std::size_t>(n.kids[0])] + row[static_cast<std::size_t>(n.kids[1])]; break;
        case Op::Sub: v = row[static_cast<std::size_t>(n.kids[0])] - row[static_cast<std::size_t>(n.kids[1])]; break;
        case Op::Mul: v = row[static_cast<std::size_t>(n.kids[0])] * row[static_cast<std::size_t>(n.kids[1])]; break;
        case Op::Div: v = row[static_cast<std::size_t>(n.kids[0])] / row[static_cast<std::size_t>(n.kids[1])]; break;
        case Op::Pow: v = std::pow(row[static_cast<std::size_t>(n.kids[0])], n.num); break;
        case Op::Min: {
          v = row[static_cast<std::size_t>(n.kids[0])];
          for (int k : n.kids) v = std::min(v, row[static_cast<std::size_t>(k)]);
          break;
        }
        case Op::Max: {
          v = row[static_cast<std::size_t>(n.kids[0])];
          for (int k : n.kids) v = std::max(v, row[static_cast<std::size_t>(k)]);
          break;
        }
        case Op::Piecewise:
          v = row[static_cast<std::size_t>(n.kids[static_cast<std::size_t>(piecewise_index(n, x, +1))])];
          break;
      }
      row[i] = v;
    }
  };

  // signed quantities whose zero crossings are kink candidates:
  // child of abs, pairwise differences under min/max
  struct Probe {
    int node;        // abs node or min/max node
    int a, b;        // b < 0: abs child a; else kids a-b difference
  };
  std::vector<Probe> probes;
  for (std::size_t i = 0; i < nn; ++i) {
    const Node& n = nodes_[i];
    if (n.op == Op::Abs) probes.push_back({static_cast<int>(i), n.kids[0], -1});
    if (n.op == Op::Min || n.op == Op::Max) {
      for (std::size_t a = 0; a < n.kids.size(); ++a)
        for (std::size_t b = a + 1; b < n.kids.size(); ++b)
          probes.push_back({static_cast<int>(i), n.kids[a], n.kids[b]});
    }
    if (n.op == Op::Piecewise) {
      for (double b : n.consts)
        if (b >= lo && b <= hi) found.push_back(b);
    }
  }
  if (!probes.empty()) {
    auto probe_val = [&](const Probe& pr, const std::vector<double>& row) {
      return pr.b < 0 ? row[static_cast<std::size_t>(pr.a)]
                      : row[static_cast<std::size_t>(pr.a)] - row[static_cast<std::size_t>(pr.b)];
    };
    const double step = (hi - lo) / scan;
    eval_all(lo, prev);
    std::vector<double> pv(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) pv[p] = probe_val(probes[p], prev);
    std::vector<double> scratch(nn);
    for (int j = 1; j <= scan; ++j) {
      const double xj = lo + step * j;
      eval_all(xj, cur);
      for (std::size_t p = 0; p < probes.size(); ++p) {
        const double v0 = pv[p];
        const double v1 = probe_val(probes[p], cur);
        if (v0 == 0.0) found.push_back(xj - step);
        else if (std::isfinite(v0) && std::isfinite(v1) && v0 * v1 < 0.0) {
          double a = xj - step, b = xj, fa = v0;
          for (int it = 0; it < 90 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
            const double m = 0.5 * (a + b);
            eval_all(m, scratch);
            const double fm = probe_val(probes[p], scratch);
            if (fm == 0.0) { a = b = m; break; }
            if (fa * fm < 0.0) b = m;
            else { a = m; fa = fm; }
          }
          found.push_back(0.5 * (a + b));
        }
        pv[p] = v1;
      }
      std::swap(prev, cur);
    }
  }

  std::sort(found.begin(), found.end());
  std::vector<double> out;
  for (double v : found) {
    if (v < lo || v > hi) continue;
    if (out.empty() || v - out.back() > 1e-11 * (1.0 + std::abs(v))) out.push_back(v);
  }
  return out;
}

// ------------------------------------------------------- structural probes

namespace {

std::uint8_t vars_mask(const std::vector<Expression::Node>& nodes, int root) {
  std::vector<std::uint8_t> m(nodes.size(), 0);
  for (int i = 0; i <= root; ++i) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    std::uint8_t v = 0;
    if (n.op == Expression::Op::Var) v = static_cast<std::uint8_t>(1u << n.var);
    for (int k : n.kids) v |= m[static_cast<std::size_t>(k)];
    m[static_cast<std::size_t>(i)] = v;
  }
  return m[static_cast<std::size_t>(root)];
}

}  // namespace

int Expression::append_subtree(const Expression& src, int src_root, int var_remap) {
  const auto& sn = src.nodes_;
  std::vector<int> map(sn.size(), -1);
  // children precede parents, so a forward pass over the subtree suffices
  std::vector<char> in_subtree(sn.size(), 0);
  in_subtree[static_cast<std::size_t>(src_root)] = 1;
  for (int i = src_root; i >= 0; --i) {
    if (!in_subtree[static_cast<std::size_t>(i)]) continue;
    for (int k : sn[static_cast<std::size_t>(i)].kids) in_subtree[static_cast<std::size_t>(k)] = 1;
  }
  for (int i = 0; i <= src_root; ++i) {
    if (!in_subtree[static_cast<std::size_t>(i)]) continue;
    Node n = sn[static_cast<std::size_t>(i)];
    if (n.op == Op::Var && var_remap >= 0) n.var = var_remap;
    for (int& k : n.kids) k = map[static_cast<std::size_t>(k)];
    nodes_.push_back(std::move(n));
    map[static_cast<std::size_t>(i)] = static_cast<int>(nodes_.size()) - 1;
  }
  return map[static_cast<std::size_t>(src_root)];
}

Expression Expression::negate(const Expression& e) {
  Expression out;
  out.dim_ = e.dim_;
  out.pq_names_ = e.pq_names_;
  const int r = out.append_subtree(e, static_cast<int>(e.nodes_.size()) - 1, -1);
  Node n;
  n.op = Op::Neg;
  n.kids = {r};
  out.nodes_.push_back(std::move(n));
  return out;
}

Expression Expression::sum(const Expression& a, const Expression& b) {
  Expression out;
  out.dim_ = std::max(a.dim_, b.dim_);
  out.pq_names_ = a.pq_names_ || b.pq_names_;
  const int ra = out.append_subtree(a, static_cast<int>(a.nodes_.size()) - 1, -1);
  const int rb = out.append_subtree(b, static_cast<int>(b.nodes_.size()) - 1, -1);
  Node n;
  n.op = Op::Add;
  n.kids = {ra, rb};
  out.nodes_.push_back(std::move(n));
  return out;
}

bool Expression::separable_parts(std::vector<Expression>* parts) const {
  if (dim_ != 2 || empty()) return false;
  struct Term {
    int root;
    bool negated;
  };
  std::vector<Term> terms;
  // flatten the top-level +/- spine
  std::vector<std::pair<int, bool>> stack{{static_cast<int>(nodes_.size()) - 1, false}};
  while (!stack.empty()) {
    auto [i, neg] = stack.back();
    stack.pop_back();
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.op == Op::Add) {
      stack.push_back({n.kids[0], neg});
      stack.push_back({n.kids[1], neg});
    } else if (n.op == Op::Sub) {
      stack.push_back({n.kids[0], neg});
      stack.push_back({n.kids[1], !neg});
    } else if (n.op == Op::Neg) {
      stack.push_back({n.kids[0], !neg});
    } else {
      terms.push_back({i, neg});
    }
  }
  for (const Term& t : terms)
    if (vars_mask(nodes_, t.root) == 3) return false;

  Expression part[2];
  for (int axis = 0; axis < 2; ++axis) {
    Expression& e = part[axis];
    e.dim_ = 1;
    int acc = -1;
    for (const Term& t : terms) {
      const std::uint8_t m = vars_mask(nodes_, t.root);
      const bool belongs = axis == 0 ? (m != 2) : (m == 2);  // constants go to part 0
      if (!belongs) continue;
      int r = e.append_subtree(*this, t.root, 0);
      if (t.negated) {
        Node n;
        n.op = Op::Neg;
        n.kids = {r};
        e.nodes_.push_back(std::move(n));
        r = static_cast<int>(e.nodes_.size()) - 1;
      }
      if (acc < 0) {
        acc = r;
      } else {
        Node n;
        n.op = Op::Add;
        n.kids = {acc, r};
        e.nodes_.push_back(std::move(n));
        acc = static_cast<int>(e.nodes_.size()) - 1;
      }
    }
    if (acc < 0) e = Expression::constant(0.0);
  }
  if (parts) {
    parts->clear();
    parts->push_back(std::move(part[0]));
    parts->push_back(std::move(part[1]));
  }
  return true;
}

bool Expression::radial_profile(Expression* profile) const {
  if (dim_ != 2 || empty()) return false;
  auto is_square_of = [&](int i, int* var) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.op == Op::Pow && n.int_exponent && n.num == 2.0) {
      const Node& k = nodes_[static_cast<std::size_t>(n.kids[0])];
      if (k.op == Op::Var) {
        *var = k.var;
        return true;
      }
    }
    if (n.op == Op::Mul) {
      const Node& a = nodes_[static_cast<std::size_t>(n.kids[0])];
      const Node& b = nodes_[static_cast<std::size_t>(n.kids[1])];
      if (a.op == Op::Var && b.op == Op::Var && a.var == b.var) {
        *var = a.var;
        return true;
      }
    }
    return false;
  };
  std::vector<char> is_norm(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op != Op::Sqrt) continue;
    const Node& s = nodes_[static_cast<std::size_t>(n.kids[0])];
    if (s.op != Op::Add) continue;
    int va = -1, vb = -1;
    if (is_square_of(s.kids[0], &va) && is_square_of(s.kids[1], &vb) && va != vb)
      is_norm[i] = 1;
  }
  // every variable occurrence must sit inside a matched sqrt subtree
  std::vector<char> covered(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (is_norm[i]) covered[i] = 1;
    if (!covered[i]) continue;
    // mark descendants
    std::vector<int> st{static_cast<int>(i)};
    while (!st.empty()) {
      const int j = st.back();
      st.pop_back();
      covered[static_cast<std::size_t>(j)] = 1;
      for (int k : nodes_[static_cast<std::size_t>(j)].kids) st.push_back(k);
    }
  }
  bool any_norm = false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (is_norm[i]) any_norm = true;
    if (nodes_[i].op == Op::Var && !covered[i]) return false;
  }
  if (!any_norm) return false;

  // rebuild with each matched subtree replaced by the radius variable
  Expression out;
  out.dim_ = 1;
  std::vector<int> map(nodes_.size(), -1);
  std::vector<char> keep(nodes_.size(), 0);
  // nodes outside matched subtrees, plus matched roots themselves
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    keep[i] = is_norm[i] || !covered[i];
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!keep[i]) continue;
    if (is_norm[i]) {
      Node n;
      n.op = Op::Var;
      n.var = 0;
      out.nodes_.push_back(std::move(n));
    } else {
      Node n = nodes_[i];
      for (int& k : n.kids) k = map[static_cast<std::size_t>(k)];
      out.nodes_.push_back(std::move(n));
    }
    map[i] = static_cast<int>(out.nodes_.size()) - 1;
  }
  if (profile) *profile = std::move(out);
  return true;
}

}  // namespace hopflax
