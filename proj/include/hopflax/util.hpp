#pragma once

#include <cstddef>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hopflax {

// Positioned failure while reading an expression or a problem file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Structurally valid input that the operation cannot accept (wrong dimension,
// empty window, unsupported shape, ...).
class InputError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A standing assumption of the theory fails: nonconvex Hamiltonian,
// non-superlinear growth, nonpositive horizon.
class HypothesisError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The computation itself broke down (search window escape after the maximum
// number of expansions, divergent iteration).
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Query for a pointwise gradient where the solution has a corner.
class NondifferentiableError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) out.push_back(lo + step * i);
  out.back() = hi;
  return out;
}

// Golden-section minimization. Works on continuous functions with a single
// minimum in [lo, hi]; callers bracket first. Returns {argmin, min}.
template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, double xtol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  if (f1 <= f2 && f1 <= fm) return {x1, f1};
  if (f2 <= fm) return {x2, f2};
  return {xm, fm};
}

// Static chunked fan-out. The partition depends only on (n, jobs), so results
// assembled by index are identical for any job count.
inline void parallel_for(std::size_t n, int jobs,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (jobs <= 1 || n < 2) {
    body(0, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t i0 = w * chunk;
    const std::size_t i1 = std::min(n, i0 + chunk);
    if (i0 >= i1) break;
    pool.emplace_back([&body, i0, i1] { body(i0, i1); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace hopflax
