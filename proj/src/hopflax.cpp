#include "hopflax/hopflax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hopflax/util.hpp"

namespace hopflax {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kDefaultRes1 = 2048;
constexpr int kDefaultRes2 = 192;
constexpr int kMaxCandidates = 64;

int resolution_for(const EvalOptions& opt, int dim) {
  if (opt.resolution > 0) return std::max(opt.resolution, 16);
  return dim == 1 ? kDefaultRes1 : kDefaultRes2;
}

struct Candidate {
  double y = 0.0;
  double value = 0.0;  // scan value before polish, exact after
  int index = 0;
};

struct Polished {
  double y = 0.0;
  double value = 0.0;
};

double h_slope(const ConjugateOracle& conj, double p) {
  double g;
  conj.h_grad(std::span<const double>(&p, 1), &g);
  return g;
}

double exact_phi(const ConjugateOracle& conj, const LineData& data, double t,
                 double x, double y) {
  return data.exact(y) + t * conj.value1((x - y) / t);
}

// Polish one scan local minimum of  phi(y) = data(y) + t H*((x-y)/t).
//
// With a data derivative available, work in the dual variable: along the
// curve y(p) = x - t H_p(p) the first-order condition reads
// chi(p) = data'(y(p)) - p, which decreases through zero at the minimum
// (small p <-> large y). Bisection pins p; data kinks show up as sign jumps
// and land y(p) on the kink. Without a derivative, golden-section on the
// exact objective over the scan bracket.
Polished polish_candidate(const ConjugateOracle& conj, const LineData& data,
                          double t, double x, double y_center, double step,
                          double y_lo, double y_hi, double p_lo, double p_hi) {
  Polished best;
  best.y = y_center;
  best.value = exact_phi(conj, data, t, x, y_center);

  bool stationary_ok = false;
  double y_hat = y_center;
  if (data.deriv) {
    if (p_hi < p_lo) std::swap(p_lo, p_hi);
    auto chi = [&](double p) { return data.deriv(x - t * h_slope(conj, p), +1) - p; };
    double clo = chi(p_lo), chi_at_hi = chi(p_hi);
    for (int widen = 0; widen < 3 && !(clo >= 0.0 && chi_at_hi <= 0.0); ++widen) {
      const double w = (p_hi - p_lo) + 1e-6 * (1.0 + std::abs(p_lo) + std::abs(p_hi));
      p_lo -= w;
      p_hi += w;
      clo = chi(p_lo);
      chi_at_hi = chi(p_hi);
    }
    if (clo >= 0.0 && chi_at_hi <= 0.0) {
      for (int it = 0; it < 80; ++it) {
        const double pm = 0.5 * (p_lo + p_hi);
        if (!(p_hi - p_lo > 1e-15 * (1.0 + std::abs(pm)))) break;
        (chi(pm) >= 0.0 ? p_lo : p_hi) = pm;
      }
      y_hat = x - t * h_slope(conj, 0.5 * (p_lo + p_hi));
      stationary_ok =
          y_hat >= y_lo - 2.0 * step - 1e-9 && y_hat <= y_hi + 2.0 * step + 1e-9;
    }
  }
  if (!stationary_ok) {
    auto phi = [&](double y) { return exact_phi(conj, data, t, x, y); };
    const double xtol = 1e-11 * (1.0 + std::abs(y_center)) + 1e-13;
    auto [ym, vm] = golden_min(phi, y_lo, y_hi, xtol);
    if (vm < best.value) {
      best.y = ym;
      best.value = vm;
    }
    return best;
  }
  const double v_hat = exact_phi(conj, data, t, x, y_hat);
  if (v_hat < best.value) {
    best.y = y_hat;
    best.value = v_hat;
  }
  return best;
}

MinimizerSet boundary_set(double value, std::span<const double> x, int dim) {
  MinimizerSet out;
  out.dim = dim;
  out.value = value;
  out.boundary_regime = true;
  Minimizer m;
  for (int a = 0; a < dim; ++a) m.y[static_cast<std::size_t>(a)] = x[static_cast<std::size_t>(a)];
  m.value = value;
  out.points.push_back(m);
  return out;
}

// Monotone-argmax sweep over sampled values: out[i] = max_k z_i p_k - h[k].
// h must be (discretely) convex for the climbing pointer to be exact.
void sweep_samples(double p0, double dp, std::span<const double> h, double z0,
                   double dz, int n, double* vals, double* args) {
  const int m = static_cast<int>(h.size()) - 1;
  int k = 0;
  for (int i = 0; i < n; ++i) {
    const double z = z0 + dz * i;
    auto g = [&](int j) { return z * (p0 + dp * j) - h[static_cast<std::size_t>(j)]; };
    while (k + 1 <= m && g(k + 1) >= g(k)) ++k;
    vals[i] = g(k);
    if (args) args[i] = p0 + dp * k;
  }
}

}  // namespace

MinimizerSet minimize_line(const ConjugateOracle& conj, const LineData& data,
                           double t, double x, const EvalOptions& opt) {
  if (!(t > 0)) throw InputError("minimize_line needs t > 0");
  const int res = resolution_for(opt, 1);
  const double vel = conj.velocity_bound(data.lipschitz + 1.0);
  double radius = std::max(t * vel, 1e-9 + 16 * std::abs(x) * 1e-16);

  std::vector<double> cv, ca, zeta;
  for (int expansion = 0;; ++expansion) {
    const double step = 2.0 * radius / res;
    const int n = res + 2 * opt.margin_steps + 1;
    const double lo = x - radius - opt.margin_steps * step;
    const double z0 = (x - (lo + step * (n - 1))) / t;
    const double dz = step / t;
    conj.sweep1(z0, dz, n, &cv, &ca);
    zeta.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      zeta[static_cast<std::size_t>(i)] =
          data.scan(lo + step * i) + t * cv[static_cast<std::size_t>(n - 1 - i)];

    int gmin = 0;
    for (int i = 1; i < n; ++i)
      if (zeta[static_cast<std::size_t>(i)] < zeta[static_cast<std::size_t>(gmin)]) gmin = i;
    const bool escaped =
        gmin <= opt.margin_steps || gmin >= n - 1 - opt.margin_steps;
    if (escaped) {
      if (expansion >= opt.max_expansions)
        throw NumericalError("search window escape: minimizer kept hitting the "
                             "window edge after " +
                             std::to_string(opt.max_expansions) + " expansions");
      radius *= 2.0;
      continue;
    }

    // every node within eps of the scan minimum, linked into runs when the
    // gap is at most the cluster radius; one polished point per run. A flat
    // bottom is then a single cluster no matter how wide it spreads.
    const double zmin = zeta[static_cast<std::size_t>(gmin)];
    const double scan_eps = opt.epsilon_coeff * (1.0 + std::abs(zmin));
    struct Run {
      int first, last, seed;
    };
    std::vector<Run> runs;
    int last_in = -(opt.cluster_steps + 2);
    for (int i = 0; i < n; ++i) {
      if (!(zeta[static_cast<std::size_t>(i)] <= zmin + scan_eps)) continue;
      if (!runs.empty() && i - last_in <= opt.cluster_steps) {
        runs.back().last = i;
        if (zeta[static_cast<std::size_t>(i)] <
            zeta[static_cast<std::size_t>(runs.back().seed)])
          runs.back().seed = i;
      } else {
        runs.push_back({i, i, i});
      }
      last_in = i;
    }

    // a run touching the margins means the near-minimal set may continue
    // outside the search window
    bool belt_at_edge = false;
    for (const Run& r : runs)
      belt_at_edge = belt_at_edge || r.first <= opt.margin_steps ||
                     r.last >= n - 1 - opt.margin_steps;
    if (belt_at_edge) {
      if (expansion >= opt.max_expansions)
        throw NumericalError("search window escape: minimizer kept hitting the "
                             "window edge after " +
                             std::to_string(opt.max_expansions) + " expansions");
      radius *= 2.0;
      continue;
    }

    if (static_cast<int>(runs.size()) > kMaxCandidates) {
      std::sort(runs.begin(), runs.end(), [&](const Run& a, const Run& b) {
        return zeta[static_cast<std::size_t>(a.seed)] <
               zeta[static_cast<std::size_t>(b.seed)];
      });
      runs.resize(kMaxCandidates);
      std::sort(runs.begin(), runs.end(),
                [](const Run& a, const Run& b) { return a.first < b.first; });
    }

    std::vector<Polished> polished;
    polished.reserve(runs.size());
    for (const Run& r : runs) {
      const int i = r.seed;
      const int j = n - 1 - i;
      const int jm = std::max(0, j - 2), jp = std::min(n - 1, j + 2);
      polished.push_back(polish_candidate(
          conj, data, t, x, lo + step * i, step, lo + step * (r.first - 1),
          lo + step * (r.last + 1), ca[static_cast<std::size_t>(jm)],
          ca[static_cast<std::size_t>(jp)]));
    }
    double best = polished.front().value;
    for (const Polished& p : polished) best = std::min(best, p.value);
    const double eps = opt.epsilon_coeff * (1.0 + std::abs(best));

    std::vector<Polished> kept;
    for (const Polished& p : polished)
      if (p.value <= best + eps) kept.push_back(p);
    std::sort(kept.begin(), kept.end(),
              [](const Polished& a, const Polished& b) { return a.y < b.y; });

    // merge clusters, keeping each cluster's best point
    std::vector<Minimizer> points;
    const double merge = opt.cluster_steps * step;
    for (const Polished& p : kept) {
      if (!points.empty() && p.y - points.back().y[0] <= merge) {
        if (p.value < points.back().value) {
          points.back().y[0] = p.y;
          points.back().value = p.value;
        }
        continue;
      }
      Minimizer m;
      m.y[0] = p.y;
      m.value = p.value;
      points.push_back(m);
    }

    const double wlo = lo, whi = lo + step * (n - 1);
    bool near_edge = false;
    for (const Minimizer& m : points)
      near_edge = near_edge || m.y[0] < wlo + (opt.margin_steps + 0.5) * step ||
                  m.y[0] > whi - (opt.margin_steps + 0.5) * step;
    if (near_edge) {
      if (expansion >= opt.max_expansions)
        throw NumericalError("search window escape: minimizer kept hitting the "
                             "window edge after " +
                             std::to_string(opt.max_expansions) + " expansions");
      radius *= 2.0;
      continue;
    }

    MinimizerSet out;
    out.dim = 1;
    out.points = std::move(points);
    out.value = best;
    out.epsilon = eps;
    out.step = step;
    return out;
  }
}

double concave_value(const ConjugateOracle& conj, const LineData& g, double s,
                     double x, const EvalOptions& opt) {
  if (s <= opt.t_min) return g.exact(x);
  // max_y { g(y) - s H*((y-x)/s) } = -min_u { -g(2x-u) + s H*((x-u)/s) }
  // via the reflection u = 2x - y.
  LineData r;
  r.scan = [&g, x](double u) { return -g.scan(2 * x - u); };
  r.exact = [&g, x](double u) { return -g.exact(2 * x - u); };
  if (g.deriv)
    r.deriv = [&g, x](double u, int side) { return g.deriv(2 * x - u, -side); };
  r.lipschitz = g.lipschitz;
  return -minimize_line(conj, r, s, x, opt).value;
}

namespace {

LineData problem_line_data(const Problem& prob) {
  const ScalarFunction* f = &prob.data();
  LineData d;
  d.scan = [f](double y) { return (*f)(y); };
  d.exact = d.scan;
  d.deriv = [f](double y, int side) { return f->deriv1(y, side); };
  d.lipschitz = prob.ball().data_lipschitz;
  return d;
}

// ---- 2-D plane minimization ------------------------------------------------

struct PlaneGrids {
  double lo[2], step[2];
  int n[2];
  std::vector<double> hstar;  // n[1] x n[0], row-major over (i2, i1)
};

// H*(z1,z2) on the z-lattice implied by the y-window, by two passes of the
// 1-D sweep: G(z1,p2) = max_p1 {z1 p1 - H(p1,p2)} is concave in p2, so the
// second pass sweeps -G. Cost O((m+n)^2) instead of n^2 ascents.
void plane_conjugate_lattice(const ConjugateOracle& conj, const double z0[2],
                             const double dz[2], const int n[2],
                             std::vector<double>* out) {
  const Expression& H = conj.hamiltonian();
  const double zmax[2] = {std::max(std::abs(z0[0]), std::abs(z0[0] + dz[0] * (n[0] - 1))),
                          std::max(std::abs(z0[1]), std::abs(z0[1] + dz[1] * (n[1] - 1)))};
  double P[2] = {2.0 * (1.0 + zmax[0]), 2.0 * (1.0 + zmax[1])};
  // grow the primal box until the edge slopes cover the dual range
  for (int a = 0; a < 2; ++a) {
    for (int expansion = 0;; ++expansion) {
      const double delta = 1e-4 * P[a];
      bool ok = true;
      for (int k = 0; k <= 4 && ok; ++k) {
        const double other = -P[1 - a] + 2.0 * P[1 - a] * k / 4.0;
        double hi1[2] = {other, other}, hi0[2] = {other, other};
        double lo1[2] = {other, other}, lo0[2] = {other, other};
        hi1[a] = P[a];
        hi0[a] = P[a] - delta;
        lo1[a] = -P[a];
        lo0[a] = -P[a] + delta;
        const double up = (H(hi1[0], hi1[1]) - H(hi0[0], hi0[1])) / delta;
        const double dn = (H(lo0[0], lo0[1]) - H(lo1[0], lo1[1])) / delta;
        ok = up >= zmax[a] && dn <= -zmax[a];
      }
      if (ok) break;
      if (expansion >= 8)
        throw HypothesisError(
            "conjugate undefined on window: Hamiltonian growth is not superlinear");
      P[a] *= 2.0;
    }
  }
  const int m1 = std::max(2 * n[0], 512), m2 = std::max(2 * n[1], 512);
  const double dp1 = 2.0 * P[0] / m1, dp2 = 2.0 * P[1] / m2;

  std::vector<double> row(static_cast<std::size_t>(m1) + 1);
  // pass 1: G[k][i1], k over p2 samples
  std::vector<double> G(static_cast<std::size_t>(m2 + 1) * n[0]);
  for (int k = 0; k <= m2; ++k) {
    const double p2 = -P[1] + dp2 * k;
    for (int j = 0; j <= m1; ++j) row[static_cast<std::size_t>(j)] = H(-P[0] + dp1 * j, p2);
    sweep_samples(-P[0], dp1, row, z0[0], dz[0], n[0],
                  &G[static_cast<std::size_t>(k) * n[0]], nullptr);
  }
  // pass 2: for each z1 column, sweep -G over p2
  out->assign(static_cast<std::size_t>(n[0]) * n[1], 0.0);
  std::vector<double> col(static_cast<std::size_t>(m2) + 1);
  std::vector<double> vals(static_cast<std::size_t>(n[1]));
  for (int i1 = 0; i1 < n[0]; ++i1) {
    for (int k = 0; k <= m2; ++k)
      col[static_cast<std::size_t>(k)] = -G[static_cast<std::size_t>(k) * n[0] + i1];
    sweep_samples(-P[1], dp2, col, z0[1], dz[1], n[1], vals.data(), nullptr);
    for (int i2 = 0; i2 < n[1]; ++i2)
      (*out)[static_cast<std::size_t>(i2) * n[0] + i1] = vals[static_cast<std::size_t>(i2)];
  }
}

struct PlaneData {
  std::function<double(const double*)> scan, exact;
  double lipschitz = 1.0;
};

MinimizerSet minimize_plane(const ConjugateOracle& conj, const PlaneData& data,
                            double t, const double x[2], const EvalOptions& opt) {
  if (!(t > 0)) throw InputError("plane minimization needs t > 0");
  const int res = resolution_for(opt, 2);
  const double vel = conj.velocity_bound(data.lipschitz + 1.0);
  double radius = std::max(t * vel, 1e-9);

  // separable Hamiltonians sweep per axis
  std::vector<Expression> parts;
  const bool split = conj.hamiltonian().separable_parts(&parts);
  std::unique_ptr<ConjugateOracle> axis_conj[2];
  if (split)
    for (int a = 0; a < 2; ++a)
      axis_conj[a] = std::make_unique<ConjugateOracle>(parts[static_cast<std::size_t>(a)]);

  for (int expansion = 0;; ++expansion) {
    const double step = 2.0 * radius / res;
    const int n = res + 2 * opt.margin_steps + 1;
    double lo[2], z0[2];
    const double dz = step / t;
    for (int a = 0; a < 2; ++a) {
      lo[a] = x[a] - radius - opt.margin_steps * step;
      z0[a] = (x[a] - (lo[a] + step * (n - 1))) / t;
    }

    // conjugate on the z-lattice
    std::vector<double> c1, c2, lattice;
    if (split) {
      std::vector<double> dummy;
      axis_conj[0]->sweep1(z0[0], dz, n, &c1, &dummy);
      axis_conj[1]->sweep1(z0[1], dz, n, &c2, &dummy);
    } else {
      const double z0v[2] = {z0[0], z0[1]};
      const double dzv[2] = {dz, dz};
      const int nv[2] = {n, n};
      plane_conjugate_lattice(conj, z0v, dzv, nv, &lattice);
    }

    std::vector<double> zeta(static_cast<std::size_t>(n) * n);
    for (int i2 = 0; i2 < n; ++i2)
      for (int i1 = 0; i1 < n; ++i1) {
        const double y[2] = {lo[0] + step * i1, lo[1] + step * i2};
        const int j1 = n - 1 - i1, j2 = n - 1 - i2;
        const double conj_val =
            split ? c1[static_cast<std::size_t>(j1)] + c2[static_cast<std::size_t>(j2)]
                  : lattice[static_cast<std::size_t>(j2) * n + j1];
        zeta[static_cast<std::size_t>(i2) * n + i1] = data.scan(y) + t * conj_val;
      }

    std::size_t gmin = 0;
    for (std::size_t k = 1; k < zeta.size(); ++k)
      if (zeta[k] < zeta[gmin]) gmin = k;
    const int g1 = static_cast<int>(gmin % static_cast<std::size_t>(n));
    const int g2 = static_cast<int>(gmin / static_cast<std::size_t>(n));
    const bool escaped = g1 <= opt.margin_steps || g1 >= n - 1 - opt.margin_steps ||
                         g2 <= opt.margin_steps || g2 >= n - 1 - opt.margin_steps;
    if (escaped) {
      if (expansion >= opt.max_expansions)
        throw NumericalError("search window escape: minimizer kept hitting the "
                             "window edge after " +
                             std::to_string(opt.max_expansions) + " expansions");
      radius *= 2.0;
      continue;
    }

    // grid local minima (4-neighborhood, plateau-tolerant)
    std::vector<std::pair<double, std::array<int, 2>>> cand;
    auto at = [&](int i1, int i2) { return zeta[static_cast<std::size_t>(i2) * n + i1]; };
    for (int i2 = 0; i2 < n; ++i2)
      for (int i1 = 0; i1 < n; ++i1) {
        const double v = at(i1, i2);
        const double tie = 1e-12 * (1.0 + std::abs(v));
        if ((i1 == 0 || v <= at(i1 - 1, i2) + tie) &&
            (i1 == n - 1 || v <= at(i1 + 1, i2) + tie) &&
            (i2 == 0 || v <= at(i1, i2 - 1) + tie) &&
            (i2 == n - 1 || v <= at(i1, i2 + 1) + tie))
          cand.push_back({v, {i1, i2}});
      }
    std::sort(cand.begin(), cand.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // spatial dedupe of plateau runs, then polish by coordinate descent
    std::vector<std::array<double, 2>> seeds;
    for (const auto& c : cand) {
      const double y1 = lo[0] + step * c.second[0], y2 = lo[1] + step * c.second[1];
      bool close = false;
      for (const auto& s : seeds)
        close = close || (std::abs(s[0] - y1) <= 1.5 * step && std::abs(s[1] - y2) <= 1.5 * step);
      if (!close) seeds.push_back({y1, y2});
      if (static_cast<int>(seeds.size()) >= kMaxCandidates) break;
    }

    std::vector<Minimizer> polished;
    for (const auto& s : seeds) {
      double y[2] = {s[0], s[1]};
      auto phi = [&](const double* yy) {
        double zq[2] = {(x[0] - yy[0]) / t, (x[1] - yy[1]) / t};
        double val, arg[2];
        conj.value_grad2(zq, &val, arg);
        return data.exact(yy) + t * val;
      };
      double value = phi(y);
      for (int round = 0; round < 3; ++round)
        for (int a = 0; a < 2; ++a) {
          auto slice = [&](double w) {
            double yy[2] = {y[0], y[1]};
            yy[a] = w;
            return phi(yy);
          };
          auto [wm, vm] = golden_min(slice, y[a] - step, y[a] + step,
                                     1e-10 * (1.0 + std::abs(y[a])));
          if (vm < value) {
            y[a] = wm;
            value = vm;
          }
        }
      Minimizer m;
      m.y = {y[0], y[1]};
      m.value = value;
      polished.push_back(m);
    }

    double best = polished.front().value;
    for (const Minimizer& m : polished) best = std::min(best, m.value);
    const double eps = opt.epsilon_coeff * (1.0 + std::abs(best));
    std::vector<Minimizer> kept;
    for (const Minimizer& m : polished)
      if (m.value <= best + eps) kept.push_back(m);
    std::sort(kept.begin(), kept.end(), [](const Minimizer& a, const Minimizer& b) {
      return a.y[0] != b.y[0] ? a.y[0] < b.y[0] : a.y[1] < b.y[1];
    });
    std::vector<Minimizer> points;
    const double merge = opt.cluster_steps * step;
    for (const Minimizer& m : kept) {
      bool merged = false;
      for (Minimizer& q : points) {
        const double d = std::hypot(m.y[0] - q.y[0], m.y[1] - q.y[1]);
        if (d <= merge) {
          if (m.value < q.value) q = m;
          merged = true;
          break;
        }
      }
      if (!merged) points.push_back(m);
    }

    bool near_edge = false;
    for (const Minimizer& m : points)
      for (int a = 0; a < 2; ++a)
        near_edge = near_edge ||
                    m.y[static_cast<std::size_t>(a)] < lo[a] + (opt.margin_steps + 0.5) * step ||
                    m.y[static_cast<std::size_t>(a)] > lo[a] + step * (n - 1) - (opt.margin_steps + 0.5) * step;
    if (near_edge) {
      if (expansion >= opt.max_expansions)
        throw NumericalError("search window escape: minimizer kept hitting the "
                             "window edge after " +
                             std::to_string(opt.max_expansions) + " expansions");
      radius *= 2.0;
      continue;
    }

    MinimizerSet out;
    out.dim = 2;
    out.points = std::move(points);
    out.value = best;
    out.epsilon = eps;
    out.step = step;
    return out;
  }
}

}  // namespace

MinimizerSet minimizer_set(const Problem& prob, double t,
                           std::span<const double> x, const EvalOptions& opt) {
  if (prob.concave())
    throw InputError("minimizer_set applies to the min-form problem; "
                     "concave problems use evaluate_concave");
  const int dim = prob.dim();
  if (static_cast<int>(x.size()) != dim)
    throw InputError("query point dimension mismatch");
  if (t < 0) throw InputError("negative time");
  if (t <= opt.t_min) return boundary_set(prob.data().value(x), x, dim);
  if (dim == 1) return minimize_line(prob.conjugate(), problem_line_data(prob), t, x[0], opt);
  const ScalarFunction* f = &prob.data();
  PlaneData d;
  d.scan = [f](const double* y) { return f->value(std::span<const double>(y, 2)); };
  d.exact = d.scan;
  d.lipschitz = prob.ball().data_lipschitz;
  const double xq[2] = {x[0], x[1]};
  return minimize_plane(prob.conjugate(), d, t, xq, opt);
}

double evaluate(const Problem& prob, double t, std::span<const double> x,
                const EvalOptions& opt) {
  return minimizer_set(prob, t, x, opt).value;
}

double evaluate1(const Problem& prob, double t, double x, const EvalOptions& opt) {
  return evaluate(prob, t, std::span<const double>(&x, 1), opt);
}

GradientPair gradient_at(const Problem& prob, double t, std::span<const double> x,
                         const EvalOptions& opt) {
  if (!(t > opt.t_min)) throw InputError("gradient_at needs t above the boundary regime");
  const MinimizerSet ms = minimizer_set(prob, t, x, opt);
  if (!ms.singleton())
    throw NondifferentiableError("minimizer set has " +
                                 std::to_string(ms.points.size()) +
                                 " clusters; no gradient");
  GradientPair g;
  const int dim = prob.dim();
  if (dim == 1) {
    const double v = (x[0] - ms.points[0].y[0]) / t;
    double val, arg;
    prob.conjugate().value_grad1(v, &val, &arg);
    g.p[0] = arg;
    g.p_t = val - v * arg;
  } else {
    const double v[2] = {(x[0] - ms.points[0].y[0]) / t, (x[1] - ms.points[0].y[1]) / t};
    double val, arg[2];
    prob.conjugate().value_grad2(v, &val, arg);
    g.p = {arg[0], arg[1]};
    g.p_t = val - v[0] * arg[0] - v[1] * arg[1];
  }
  return g;
}

SolutionGrid solve_grid(const Problem& prob, std::span<const double> t_nodes,
                        std::span<const double> x_nodes,
                        std::span<const double> x2_nodes, const EvalOptions& opt) {
  SolutionGrid grid;
  grid.dim = prob.dim();
  grid.t_nodes.assign(t_nodes.begin(), t_nodes.end());
  grid.x_nodes.assign(x_nodes.begin(), x_nodes.end());
  grid.x2_nodes.assign(x2_nodes.begin(), x2_nodes.end());
  if (grid.dim == 2 && grid.x2_nodes.empty())
    throw InputError("2-D grid needs x2 nodes");
  const std::size_t n1 = grid.x_nodes.size();
  const std::size_t n2 = grid.dim == 2 ? grid.x2_nodes.size() : 1;
  const std::size_t total = grid.t_nodes.size() * n1 * n2;
  grid.values.assign(total, kNaN);
  grid.p_t.assign(total, kNaN);
  grid.p_x.assign(total, kNaN);
  if (grid.dim == 2) grid.p_x2.assign(total, kNaN);
  grid.differentiable.assign(total, 0);
  grid.status.assign(total, 0);

  parallel_for(total, opt.jobs, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      const std::size_t it = k / (n1 * n2);
      const std::size_t j = (k / n1) % n2;
      const std::size_t i = k % n1;
      const double t = grid.t_nodes[it];
      double pt[2] = {grid.x_nodes[i], 0.0};
      if (grid.dim == 2) pt[1] = grid.x2_nodes[j];
      const std::span<const double> xq(pt, static_cast<std::size_t>(grid.dim));
      try {
        const MinimizerSet ms = minimizer_set(prob, t, xq, opt);
        grid.values[k] = ms.value;
        if (ms.boundary_regime) {
          grid.status[k] = 1;
          continue;
        }
        grid.differentiable[k] = ms.singleton() ? 1 : 0;
        if (ms.singleton()) {
          if (grid.dim == 1) {
            const double v = (pt[0] - ms.points[0].y[0]) / t;
            double val, arg;
            prob.conjugate().value_grad1(v, &val, &arg);
            grid.p_x[k] = arg;
            grid.p_t[k] = val - v * arg;
          } else {
            const double v[2] = {(pt[0] - ms.points[0].y[0]) / t,
                                 (pt[1] - ms.points[0].y[1]) / t};
            double val, arg[2];
            prob.conjugate().value_grad2(v, &val, arg);
            grid.p_x[k] = arg[0];
            grid.p_x2[k] = arg[1];
            grid.p_t[k] = val - v[0] * arg[0] - v[1] * arg[1];
          }
        }
      } catch (const NumericalError&) {
        grid.status[k] = 2;
      }
    }
  });
  return grid;
}

SemigroupReport semigroup_check(const Problem& prob, double s, double t, double x,
                                const EvalOptions& opt) {
  if (prob.dim() != 1) throw InputError("semigroup check is one-dimensional");
  if (!(opt.t_min < s && s < t && t <= prob.horizon() + 1e-12))
    throw InputError("semigroup check needs t_min < s < t <= horizon");
  SemigroupReport rep;
  rep.direct = evaluate1(prob, t, x, opt);

  // cheap scan data: u(s,.) interpolated from a pre-solved window
  const double vel = prob.ball().max_velocity;
  const double reach = (t - s) * vel;
  const double pad = 0.5 + 8.0 * reach / kDefaultRes1;
  const double wlo = x - reach - pad, whi = x + reach + pad;
  const int nodes = 385;
  EvalOptions inner = opt;
  inner.resolution = 512;
  std::vector<double> vals(static_cast<std::size_t>(nodes));
  const double dxg = (whi - wlo) / (nodes - 1);
  for (int i = 0; i < nodes; ++i)
    vals[static_cast<std::size_t>(i)] = evaluate1(prob, s, wlo + dxg * i, inner);
  ScalarFunction inner_sf = ScalarFunction::grid1(wlo, dxg, std::move(vals));

  EvalOptions polish_opt = opt;
  polish_opt.resolution = 1024;
  LineData d;
  d.scan = [&inner_sf](double y) { return inner_sf(y); };
  d.exact = [&prob, s, &polish_opt](double y) { return evaluate1(prob, s, y, polish_opt); };
  d.lipschitz = prob.ball().data_lipschitz;
  const MinimizerSet ms = minimize_line(prob.conjugate(), d, t - s, x, opt);
  rep.nested = ms.value;
  rep.inner_argmin = ms.points.front().y[0];
  rep.residual = std::abs(rep.direct - rep.nested);
  return rep;
}

double evaluate_concave(const Problem& prob, double t, double x,
                        const EvalOptions& opt) {
  if (!prob.concave())
    throw InputError("evaluate_concave needs a concave-mode problem");
  if (prob.dim() != 1) throw InputError("the max-form path is one-dimensional");
  LineData d = problem_line_data(prob);
  // identical to the backward sweep: max_y { data(y) - t (-K)*((y-x)/t) }
  return concave_value(prob.conjugate(), d, t, x, opt);
}

}  // namespace hopflax
