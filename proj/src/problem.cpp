#include "hopflax/problem.hpp"

#include <cmath>

#include "hopflax/util.hpp"

namespace hopflax {

struct Problem::Impl {
  Expression field;
  Expression convex_field;
  ScalarFunction data;
  std::unique_ptr<ConjugateOracle> oracle;
  double horizon = 1.0;
  double window_lo[2] = {-4.0, -4.0};
  double window_hi[2] = {4.0, 4.0};
  bool concave = false;
  bool terminal = false;
  std::string name;
  SearchBall ball;
  HypothesisReport hypotheses;
};

namespace {

// Verdicts for a 2-D Hamiltonian that does not split into coordinate parts:
// midpoint convexity over deterministic random segments plus directional
// growth ratios. Coarser than the 1-D analysis but catches honest violations.
ConvexityReport analyze_joint_2d(const Expression& h, double window) {
  ConvexityReport rep;
  rep.convex = true;
  rep.strictly_convex = true;
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  for (int trial = 0; trial < 4096; ++trial) {
    const double a[2] = {window * (2 * next() - 1), window * (2 * next() - 1)};
    const double b[2] = {window * (2 * next() - 1), window * (2 * next() - 1)};
    const double m[2] = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
    const double fa = h(a[0], a[1]), fb = h(b[0], b[1]), fm = h(m[0], m[1]);
    const double excess = fa + fb - 2 * fm;
    const double scale = 1.0 + std::abs(fa) + std::abs(fb);
    if (excess < -1e-10 * scale) {
      rep.convex = false;
      rep.has_witness = true;
      rep.witness = {a[0], m[0], b[0]};
      break;
    }
    const double gap2 = (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
    if (gap2 > 0.25 * window * window && excess <= 1e-12 * scale)
      rep.strictly_convex = false;
  }
  rep.superlinear = true;
  const double dirs[8][2] = {{1, 0},  {0, 1},  {-1, 0}, {0, -1},
                             {1, 1},  {-1, 1}, {1, -1}, {-1, -1}};
  for (const auto& d : dirs) {
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1]);
    auto slope = [&](double r) {
      return (h(r * d[0], r * d[1]) - h(0.0, 0.0)) / (r * norm);
    };
    const double s1 = slope(window), s2 = slope(2 * window), s4 = slope(4 * window);
    if (!(s2 >= 1.2 * std::max(s1, 0.0) + 1e-3 && s4 >= 1.2 * s2 + 1e-3)) {
      rep.superlinear = false;
      break;
    }
  }
  return rep;
}

ConvexityReport combine_parts(const ConvexityReport& a, const ConvexityReport& b) {
  ConvexityReport rep = a;
  rep.convex = a.convex && b.convex;
  rep.strictly_convex = a.strictly_convex && b.strictly_convex;
  rep.superlinear = a.superlinear && b.superlinear;
  rep.uniform_convexity = std::min(a.uniform_convexity, b.uniform_convexity);
  if (!a.has_witness && b.has_witness) {
    rep.has_witness = true;
    rep.witness = b.witness;
  }
  rep.semiconcavity.constant =
      std::max(a.semiconcavity.constant, b.semiconcavity.constant);
  rep.semiconcavity.infinite = a.semiconcavity.infinite || b.semiconcavity.infinite;
  return rep;
}

}  // namespace

Problem Problem::make_unchecked(Config cfg) {
  if (cfg.data.empty()) throw InputError("problem needs data");
  if (cfg.hamiltonian.empty()) throw InputError("problem needs a Hamiltonian");
  const int dim = cfg.hamiltonian.dimension();
  if (cfg.data.dimension() != dim)
    throw InputError("data and Hamiltonian dimensions disagree");
  if (!(cfg.horizon > 0)) throw HypothesisError("horizon must be positive");
  for (int a = 0; a < dim; ++a)
    if (!(cfg.window_hi[a] > cfg.window_lo[a]))
      throw InputError("empty reporting window");

  auto impl = std::make_shared<Impl>();
  impl->field = cfg.hamiltonian;
  impl->convex_field =
      cfg.concave ? Expression::negate(cfg.hamiltonian) : cfg.hamiltonian;
  impl->data = std::move(cfg.data);
  impl->horizon = cfg.horizon;
  for (int a = 0; a < 2; ++a) {
    impl->window_lo[a] = cfg.window_lo[a];
    impl->window_hi[a] = cfg.window_hi[a];
  }
  impl->concave = cfg.concave;
  impl->terminal = cfg.terminal;
  impl->name = std::move(cfg.name);
  impl->oracle = std::make_unique<ConjugateOracle>(impl->convex_field);

  // Two-pass Lipschitz estimate: a first bound on the reporting window fixes
  // a velocity scale, which inflates the window the data is actually sampled
  // on (minimizers live inside the inflated window).
  double lip0;
  if (cfg.lipschitz_hint) {
    lip0 = *cfg.lipschitz_hint;
    impl->ball.data_lipschitz = lip0;
  } else {
    double span_lo = impl->window_lo[0] - 1.0, span_hi = impl->window_hi[0] + 1.0;
    lip0 = impl->data.lipschitz(span_lo, span_hi);
    const double v0 = impl->oracle->velocity_bound(lip0 + 1.0);
    const double reach = impl->horizon * v0 + 1.0;
    impl->ball.data_lipschitz =
        impl->data.lipschitz(impl->window_lo[0] - reach, impl->window_hi[0] + reach);
  }
  impl->ball.max_velocity =
      impl->oracle->velocity_bound(impl->ball.data_lipschitz + 1.0);

  // Hypothesis verdicts on the convex field over the slope range in play.
  const double span = std::max(4.0, impl->ball.data_lipschitz + 2.0);
  ConvexityReport rep;
  if (dim == 1) {
    rep = analyze_convexity(ScalarFunction::from_expression(impl->convex_field),
                            -span, span);
  } else {
    std::vector<Expression> parts;
    if (impl->convex_field.separable_parts(&parts)) {
      rep = combine_parts(
          analyze_convexity(ScalarFunction::from_expression(parts[0]), -span, span),
          analyze_convexity(ScalarFunction::from_expression(parts[1]), -span, span));
    } else {
      rep = analyze_joint_2d(impl->convex_field, span);
    }
  }
  impl->hypotheses.hamiltonian = rep;
  std::string diag;
  if (!rep.convex) {
    diag = "Hamiltonian is not convex";
    if (rep.has_witness)
      diag += ": midpoint violation at (" + format_g17(rep.witness[0]) + ", " +
              format_g17(rep.witness[1]) + ", " + format_g17(rep.witness[2]) + ")";
  } else if (!rep.strictly_convex) {
    diag = "Hamiltonian is not strictly convex on the slope window";
  } else if (!rep.superlinear) {
    diag = "Hamiltonian growth is not superlinear";
  }
  impl->hypotheses.diagnostic = diag;

  Problem p;
  p.impl_ = std::move(impl);
  return p;
}

Problem Problem::make(Config cfg) {
  Problem p = make_unchecked(std::move(cfg));
  if (!p.hypotheses().ok()) throw HypothesisError(p.hypotheses().diagnostic);
  return p;
}

int Problem::dim() const { return impl_->field.dimension(); }
const Expression& Problem::field() const { return impl_->field; }
const Expression& Problem::convex_field() const { return impl_->convex_field; }
const ScalarFunction& Problem::data() const { return impl_->data; }
const ConjugateOracle& Problem::conjugate() const { return *impl_->oracle; }
double Problem::horizon() const { return impl_->horizon; }
double Problem::window_lo(int axis) const { return impl_->window_lo[axis]; }
double Problem::window_hi(int axis) const { return impl_->window_hi[axis]; }
bool Problem::concave() const { return impl_->concave; }
bool Problem::terminal() const { return impl_->terminal; }
const std::string& Problem::name() const { return impl_->name; }
const SearchBall& Problem::ball() const { return impl_->ball; }
const HypothesisReport& Problem::hypotheses() const { return impl_->hypotheses; }

}  // namespace hopflax
