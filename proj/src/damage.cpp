#include "dldr/damage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dldr {

namespace {
constexpr double kHuge = std::numeric_limits<double>::max();
}

KneePoint dldr_knee(const DldrParams& p, double N1, double N2) {
  if (!(N1 > 0.0) || !(N2 > 0.0))
    throw std::invalid_argument("dldr_knee: lives must be positive");
  const double scale = std::pow(N1 / N2, p.alpha);
  KneePoint k;
  k.beta1 = (1.0 - p.b) * scale;
  k.beta2 = p.b * scale;
  k.inside_unit_square =
      k.beta1 > 0.0 && k.beta1 < 1.0 && k.beta2 > 0.0 && k.beta2 < 1.0;
  return k;
}

double dldr_beta2(double beta1, const KneePoint& k) {
  if (beta1 < 0.0 || beta1 > 1.0)
    throw std::invalid_argument("dldr_beta2: beta1 must be in [0,1]");
  if (!k.inside_unit_square)
    throw std::invalid_argument(
        "dldr_beta2: knee outside the open unit square");
  if (beta1 <= k.beta1) {
    // Phase I segment from (0,1) to the knee.
    return ((k.beta2 - 1.0) / k.beta1) * beta1 + 1.0;
  }
  // Phase II segment from the knee to (1,0).
  return k.beta2 * (1.0 + k.beta1 / (1.0 - k.beta1)) * (1.0 - beta1);
}

double dldr_remaining(double n1, double N1, double N2, const KneePoint& k) {
  if (!(N1 > 0.0) || !(N2 > 0.0))
    throw std::invalid_argument("dldr_remaining: lives must be positive");
  if (n1 < 0.0 || n1 > N1)
    throw std::invalid_argument("dldr_remaining: n1 must be in [0, N1]");
  return dldr_beta2(n1 / N1, k) * N2;
}

double nonlinear_remaining(double n1, double N1, double N2,
                           const NonlinearParams& p, bool* warning) {
  if (warning) *warning = false;
  if (!(p.n_e > 0.0) || !(p.q_ratio > 0.0))
    throw std::invalid_argument("nonlinear_remaining: bad parameters");
  if (!(N1 > 0.0) || !(N2 > 0.0) || n1 < 0.0 || n1 > N1)
    throw std::invalid_argument("nonlinear_remaining: n1 must be in [0, N1]");
  if (!(N1 < p.n_e) || !(N2 < p.n_e))
    throw std::invalid_argument(
        "nonlinear_remaining: lives must sit below the endurance limit");
  if (n1 == 0.0) return N2;  // limit of the iso-damage relation

  const double le = std::log10(p.n_e);
  const double l1 = std::log10(N1);
  const double l2 = std::log10(N2);
  const double ln1 = std::log10(n1);
  const double ratio = std::pow((le - l1) / (le - ln1), p.q_ratio);
  const double log_left = le - (le - l2) / ratio;
  const double raw = N2 - std::pow(10.0, log_left);
  if (warning && (raw < -1e-9 * N2 || raw > N2 * (1.0 + 1e-9)))
    *warning = true;
  return std::clamp(raw, 0.0, N2);
}

namespace {

double dldr_sse(const std::vector<std::pair<double, double>>& points,
                double n_ratio, double alpha, double b) {
  const double scale = std::pow(n_ratio, alpha);
  KneePoint k;
  k.beta1 = (1.0 - b) * scale;
  k.beta2 = b * scale;
  k.inside_unit_square =
      k.beta1 > 0.0 && k.beta1 < 1.0 && k.beta2 > 0.0 && k.beta2 < 1.0;
  if (!k.inside_unit_square) return kHuge;
  double sse = 0.0;
  for (const auto& [b1, b2] : points) {
    const double r = dldr_beta2(std::clamp(b1, 0.0, 1.0), k) - b2;
    sse += r * r;
  }
  return sse;
}

}  // namespace

DldrFit fit_dldr(const std::vector<std::pair<double, double>>& points,
                 double n_ratio, const Interval& alpha_support,
                 const Interval& b_support) {
  if (points.size() < 2)
    throw std::invalid_argument("fit_dldr: need at least 2 points");
  if (!(n_ratio > 0.0))
    throw std::invalid_argument("fit_dldr: n_ratio must be positive");
  if (!(alpha_support.lo < alpha_support.hi) || !(b_support.lo < b_support.hi))
    throw std::invalid_argument("fit_dldr: bad support intervals");
  double b1min = points[0].first, b1max = points[0].first;
  for (const auto& pt : points) {
    b1min = std::min(b1min, pt.first);
    b1max = std::max(b1max, pt.first);
  }
  if (!(b1max > b1min))
    throw std::invalid_argument("fit_dldr: all beta1 values identical");

  const int n_grid = 101;
  auto at = [](const Interval& iv, int i, int n) {
    return iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) /
                       static_cast<double>(n - 1);
  };

  double best_a = alpha_support.lo, best_b = b_support.lo, best = kHuge;
  for (int i = 0; i < n_grid; ++i) {
    const double a = at(alpha_support, i, n_grid);
    for (int j = 0; j < n_grid; ++j) {
      const double b = at(b_support, j, n_grid);
      const double v = dldr_sse(points, n_ratio, a, b);
      if (v < best) {
        best = v;
        best_a = a;
        best_b = b;
      }
    }
  }
  if (best >= kHuge)
    throw std::invalid_argument(
        "fit_dldr: no knee inside the unit square over the support box");

  // Compass refinement: axis-aligned probes with halving steps.
  double step_a = (alpha_support.hi - alpha_support.lo) / (n_grid - 1);
  double step_b = (b_support.hi - b_support.lo) / (n_grid - 1);
  while (step_a > 1e-7 || step_b > 1e-7) {
    bool improved = false;
    const double cand[4][2] = {{best_a + step_a, best_b},
                               {best_a - step_a, best_b},
                               {best_a, best_b + step_b},
                               {best_a, best_b - step_b}};
    for (const auto& c : cand) {
      const double a = std::clamp(c[0], alpha_support.lo, alpha_support.hi);
      const double b = std::clamp(c[1], b_support.lo, b_support.hi);
      const double v = dldr_sse(points, n_ratio, a, b);
      if (v < best) {
        best = v;
        best_a = a;
        best_b = b;
        improved = true;
      }
    }
    if (!improved) {
      step_a *= 0.5;
      step_b *= 0.5;
    }
  }

  DldrFit fit;
  fit.params.alpha = best_a;
  fit.params.b = best_b;
  fit.sse = best;

  // Probe the B axis at the fitted alpha: a flat profile means B cancels
  // out of the objective and the reported value is arbitrary.
  double lo_probe = kHuge, hi_probe = -kHuge;
  for (int j = 0; j < n_grid; ++j) {
    const double v = dldr_sse(points, n_ratio, best_a, at(b_support, j, n_grid));
    if (v >= kHuge) continue;
    lo_probe = std::min(lo_probe, v);
    hi_probe = std::max(hi_probe, v);
  }
  if (hi_probe - lo_probe <= 1e-12 * (1.0 + lo_probe)) {
    fit.b_unidentifiable = true;
    fit.params.b = 0.5 * (b_support.lo + b_support.hi);
    fit.sse = dldr_sse(points, n_ratio, best_a, fit.params.b);
  }
  return fit;
}

double fit_qratio(const std::vector<std::pair<double, double>>& points,
                  double N1, double N2, double n_e) {
  if (points.empty())
    throw std::invalid_argument("fit_qratio: need at least 1 point");
  if (!(N1 > 0.0) || !(N2 > 0.0) || !(n_e > N1) || !(n_e > N2))
    throw std::invalid_argument("fit_qratio: model preconditions violated");
  for (const auto& [n1, n2] : points)
    if (!(n1 > 0.0) || n1 > N1 || !(n2 > 0.0))
      throw std::invalid_argument("fit_qratio: points must have 0 < n1 <= N1 "
                                  "and positive n2");

  auto sse = [&](double q) {
    NonlinearParams p{n_e, q};
    double acc = 0.0;
    for (const auto& [n1, n2] : points) {
      const double pred = nonlinear_remaining(n1, N1, N2, p);
      if (!(pred > 0.0)) return kHuge;
      const double r = std::log10(pred) - std::log10(n2);
      acc += r * r;
    }
    return acc;
  };

  // Golden-section search on the fixed bracket.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.05, b = 20.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = sse(c), fd = sse(d);
  for (int it = 0; it < 200 && (b - a) > 1e-10 * 20.0; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = sse(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = sse(d);
    }
  }
  const double q = 0.5 * (a + b);
  if (q <= 0.05 + 1e-6 || q >= 20.0 - 1e-6)
    throw std::runtime_error(
        "fit_qratio: no interior minimum on the [0.05, 20] bracket");
  return q;
}

}  // namespace dldr
