#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dldr {

// Adaptive Gauss-Kronrod (7-15) integration.
//
// Finite intervals are integrated directly. Semi-infinite ranges are mapped
// onto (0,1) with x = lo + t/(1-t) (mirrored as x = hi - t/(1-t) for a lower
// infinite end); a doubly infinite range is split at a caller-supplied center
// and handled as two semi-infinite halves. Caller-supplied breakpoints force
// subdivision, which is what keeps narrow peaks from slipping between the
// initial nodes.

namespace detail {

// QUADPACK dqk15 abscissae and weights on [-1,1].
inline constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
void gauss_kronrod(const F& f, double a, double b, double& kron, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fc = f(c);
  double resk = kKronrodWeights[7] * fc;
  double resg = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    resk += kKronrodWeights[i] * (f1 + f2);
    if (i % 2 == 1) resg += kGaussWeights[i / 2] * (f1 + f2);
  }
  kron = resk * h;
  err = std::abs((resk - resg) * h);
}

template <class F>
double adapt(const F& f, double a, double b, double tol, int depth) {
  double kron, err;
  gauss_kronrod(f, a, b, kron, err);
  // The error estimate bottoms out at roundoff noise; without this floor the
  // recursion thrashes to full depth wherever tol undercuts it.
  const double noise = 1e-14 * std::abs(kron) + 5e-305;
  if (err <= std::max(tol, noise) || depth <= 0) return kron;
  const double m = 0.5 * (a + b);
  if (!(a < m && m < b)) return kron;  // interval exhausted in double precision
  return adapt(f, a, m, 0.5 * tol, depth - 1) +
         adapt(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace detail

struct QuadOptions {
  double abs_tol = 1e-12;
  int max_depth = 40;
};

// Integrate f over the finite interval [a,b]. Breakpoints strictly inside
// (a,b) split the range before adaptive refinement starts.
template <class F>
double integrate(const F& f, double a, double b,
                 const std::vector<double>& breakpoints = {},
                 const QuadOptions& opt = {}) {
  if (!(a < b)) {
    if (a == b) return 0.0;
    throw std::invalid_argument("integrate: empty interval");
  }
  std::vector<double> cuts;
  cuts.push_back(a);
  for (double x : breakpoints)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0;
  const double per_piece = opt.abs_tol / static_cast<double>(cuts.size() - 1);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += detail::adapt(f, cuts[i], cuts[i + 1], per_piece, opt.max_depth);
  return total;
}

// Integrate f over [lo, +inf) via x = lo + t/(1-t). Breakpoints are given in
// x coordinates and mapped into t space.
template <class F>
double integrate_upper_infinite(const F& f, double lo,
                                const std::vector<double>& breakpoints = {},
                                const QuadOptions& opt = {}) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double om = 1.0 - t;
    const double x = lo + t / om;
    const double v = f(x);
    return v / (om * om);
  };
  std::vector<double> tcuts;
  for (double x : breakpoints) {
    if (x <= lo || !std::isfinite(x)) continue;
    const double u = x - lo;
    tcuts.push_back(u / (1.0 + u));
  }
  return integrate(g, 0.0, 1.0, tcuts, opt);
}

// Integrate f over (-inf, hi] via x = hi - t/(1-t).
template <class F>
double integrate_lower_infinite(const F& f, double hi,
                                const std::vector<double>& breakpoints = {},
                                const QuadOptions& opt = {}) {
  auto g = [&](double x) { return f(hi - (x - hi)); };  // reflect about hi
  std::vector<double> refl;
  for (double x : breakpoints)
    if (std::isfinite(x)) refl.push_back(hi + (hi - x));
  return integrate_upper_infinite(g, hi, refl, opt);
}

// General-purpose entry: either bound may be infinite. `center` is used to
// split a doubly infinite range.
template <class F>
double integrate_any(const F& f, double a, double b,
                     const std::vector<double>& breakpoints = {},
                     double center = 0.0, const QuadOptions& opt = {}) {
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (!lo_inf && !hi_inf) return integrate(f, a, b, breakpoints, opt);
  if (lo_inf && hi_inf) {
    return integrate_lower_infinite(f, center, breakpoints, opt) +
           integrate_upper_infinite(f, center, breakpoints, opt);
  }
  if (hi_inf) return integrate_upper_infinite(f, a, breakpoints, opt);
  return integrate_lower_infinite(f, b, breakpoints, opt);
}

}  // namespace dldr
