#include "dldr/maxent.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dldr/quadrature.hpp"
#include "dldr/textio.hpp"

namespace dldr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exponent of the unnormalized density in working coordinates.
inline double expo(double l1, double l2, double z) { return -(l1 + l2 * z) * z; }

// A trial (l1,l2) is integrable iff the exponent decays toward every
// infinite end of the support.
bool integrable(double l1, double l2, double za, double zb) {
  if (std::isinf(zb)) {
    if (l2 < 0.0) return false;
    if (l2 == 0.0 && l1 <= 0.0) return false;
  }
  if (std::isinf(za)) {
    if (l2 < 0.0) return false;
    if (l2 == 0.0 && l1 >= 0.0) return false;
  }
  return true;
}

// Largest exponent value over the support; factoring it out keeps every
// integrand in [0,1] regardless of how peaked the density is.
double max_exponent(double l1, double l2, double za, double zb) {
  double m = -kInf;
  if (std::isfinite(za)) m = std::max(m, expo(l1, l2, za));
  if (std::isfinite(zb)) m = std::max(m, expo(l1, l2, zb));
  if (l2 > 0.0) {
    const double zstar = -l1 / (2.0 * l2);
    if (zstar >= za && zstar <= zb) m = std::max(m, expo(l1, l2, zstar));
  }
  if (l2 == 0.0) {
    // Linear exponent: the max sits at the end the slope climbs toward;
    // that end is finite whenever the configuration is integrable.
    if (l1 > 0.0 && std::isfinite(za)) m = std::max(m, expo(l1, l2, za));
    if (l1 < 0.0 && std::isfinite(zb)) m = std::max(m, expo(l1, l2, zb));
  }
  if (!std::isfinite(m)) m = 0.0;
  return m;
}

// Subdivision hints so the adaptive pass cannot overlook a narrow peak.
std::vector<double> peak_breakpoints(double l1, double l2, double za, double zb) {
  static const double steps[] = {0.5, 1, 2, 3, 5, 8, 13, 21, 34};
  std::vector<double> bp;
  auto fan = [&](double center, double width) {
    if (!std::isfinite(center) || !(width > 0.0) || !std::isfinite(width)) return;
    bp.push_back(center);
    for (double k : steps) {
      bp.push_back(center - k * width);
      bp.push_back(center + k * width);
    }
  };
  if (l2 != 0.0) {
    fan(-l1 / (2.0 * l2), 1.0 / std::sqrt(2.0 * std::abs(l2)));
  }
  if (l1 != 0.0) {
    const double w = 1.0 / std::abs(l1);
    if (std::isfinite(za)) fan(za, w);
    if (std::isfinite(zb)) fan(zb, w);
  }
  if (std::isfinite(za) && std::isfinite(zb)) {
    bp.push_back(0.5 * (za + zb));
  }
  std::vector<double> inside;
  for (double x : bp)
    if (x > za && x < zb && std::isfinite(x)) inside.push_back(x);
  return inside;
}

struct Moments {
  double log_z = 0.0;  // log of the normalizing integral
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

Moments compute_moments(double l1, double l2, double za, double zb) {
  const double m = max_exponent(l1, l2, za, zb);
  const auto bp = peak_breakpoints(l1, l2, za, zb);
  const double center = (std::isfinite(za) || std::isfinite(zb))
                            ? (std::isfinite(za) ? za : zb)
                            : (l2 > 0.0 ? -l1 / (2.0 * l2) : 0.0);
  QuadOptions opt;
  opt.abs_tol = 1e-13;
  auto raw = [&](int k) {
    return integrate_any(
        [&](double z) {
          double w = std::exp(expo(l1, l2, z) - m);
          for (int i = 0; i < k; ++i) w *= z;
          return w;
        },
        za, zb, bp, center, opt);
  };
  const double i0 = raw(0);
  if (!(i0 > 0.0) || !std::isfinite(i0))
    throw infeasible_error("maxent: normalizing integral degenerated");
  Moments out;
  out.log_z = m + std::log(i0);
  out.m1 = raw(1) / i0;
  out.m2 = raw(2) / i0;
  out.m3 = raw(3) / i0;
  out.m4 = raw(4) / i0;
  return out;
}

struct DualState {
  double l1 = 0.0, l2 = 0.0;
  Moments mom;
  double dual = kInf;  // log Z + l1*t1 + l2*t2
};

// Damped Newton minimization of the convex dual in working coordinates.
// `use_l2` selects the one- or two-constraint problem; targets are the
// standardized first and second raw moments.
DualState solve_dual(double za, double zb, double t1, double t2, bool use_l2,
                     double l1_init, double l2_init, double tol, int max_iter) {
  auto eval = [&](double l1, double l2, DualState& s) {
    if (!integrable(l1, l2, za, zb)) return false;
    s.l1 = l1;
    s.l2 = l2;
    s.mom = compute_moments(l1, l2, za, zb);
    s.dual = s.mom.log_z + l1 * t1 + (use_l2 ? l2 * t2 : 0.0);
    return std::isfinite(s.dual);
  };

  DualState cur;
  if (!eval(l1_init, l2_init, cur))
    throw infeasible_error("maxent: initial multipliers not integrable");

  for (int iter = 0; iter < max_iter; ++iter) {
    const double r1 = cur.mom.m1 - t1;
    const double r2 = cur.mom.m2 - t2;
    const bool ok1 = std::abs(r1) <= tol * std::max(1.0, std::abs(t1));
    const bool ok2 =
        !use_l2 || std::abs(r2) <= tol * std::max(1.0, std::abs(t2));
    if (ok1 && ok2) return cur;

    double d1 = 0.0, d2 = 0.0;
    const double var = cur.mom.m2 - cur.mom.m1 * cur.mom.m1;
    if (!use_l2) {
      d1 = (var > 0.0) ? r1 / var : r1;
    } else {
      const double c12 = cur.mom.m3 - cur.mom.m1 * cur.mom.m2;
      const double v2 = cur.mom.m4 - cur.mom.m2 * cur.mom.m2;
      const double det = var * v2 - c12 * c12;
      if (det > 0.0 && std::isfinite(det)) {
        d1 = (v2 * r1 - c12 * r2) / det;
        d2 = (-c12 * r1 + var * r2) / det;
      } else {  // fall back to a gradient-like step
        d1 = r1;
        d2 = r2;
      }
    }

    // Near the optimum the predicted decrease (~|r|^2) drops below one ulp
    // of the dual value and a strict-decrease line search cannot see it any
    // more; the full Newton step is locally contracting, so take it.
    const double predicted = 0.5 * (d1 * r1 + d2 * r2);
    if (predicted >= 0.0 &&
        predicted <= 1e-13 * std::max(1.0, std::abs(cur.dual)) &&
        std::abs(d1) + std::abs(d2) < 1e-4) {
      DualState polish;
      if (eval(cur.l1 + d1, cur.l2 + d2, polish)) {
        cur = polish;
        continue;
      }
    }

    bool accepted = false;
    double step = 1.0;
    DualState trial;
    for (int halving = 0; halving <= 30; ++halving) {
      if (eval(cur.l1 + step * d1, cur.l2 + step * d2, trial) &&
          trial.dual < cur.dual) {
        cur = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Stagnated with residuals already at the quadrature noise floor:
      // that is the numerical optimum, not divergence.
      if (std::abs(r1) <= 1e-8 * std::max(1.0, std::abs(t1)) &&
          (!use_l2 || std::abs(r2) <= 1e-8 * std::max(1.0, std::abs(t2))))
        return cur;
      throw infeasible_error(
          "maxent: dual solve diverged; constraints are infeasible for the "
          "exponential family on this support");
    }
  }
  throw infeasible_error(
      "maxent: dual solve did not converge; constraints are infeasible or "
      "numerically degenerate");
}

}  // namespace

void MomentConstraints::validate() const {
  if (std::isnan(support_lo) || std::isnan(support_hi) ||
      !(support_lo < support_hi))
    throw std::invalid_argument("constraints: support_lo must be < support_hi");
  if (std_dev && !mean)
    throw std::invalid_argument("constraints: std requires a mean");
  if (std_dev && !(*std_dev > 0.0))
    throw std::invalid_argument("constraints: std must be positive");
  if (mean) {
    if (!std::isfinite(*mean) || !(*mean > support_lo) ||
        !(*mean < support_hi))
      throw std::invalid_argument(
          "constraints: mean must lie strictly inside the support");
  }
  const bool lo_inf = std::isinf(support_lo);
  const bool hi_inf = std::isinf(support_hi);
  if (lo_inf && hi_inf && !(mean && std_dev))
    throw std::invalid_argument(
        "constraints: doubly infinite support requires mean and std");
  if ((lo_inf || hi_inf) && !mean)
    throw std::invalid_argument(
        "constraints: unbounded support without a mean is not normalizable");
}

MaxEntDistribution fit_maxent(const MomentConstraints& c, double tol,
                              int max_iter) {
  c.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("fit_maxent: tol must be > 0");
  if (max_iter < 1)
    throw std::invalid_argument("fit_maxent: max_iter must be >= 1");

  MaxEntDistribution d;
  d.constraints_ = c;

  const double lo = c.support_lo;
  const double hi = c.support_hi;

  if (!c.mean) {
    // No moment information: the entropy maximizer is the uniform density.
    d.lambdas_ << std::log(hi - lo), 0.0, 0.0;
    d.entropy_ = std::log(hi - lo);
    d.build_grid();
    return d;
  }

  // Standardize so the dual solve always works on O(1) numbers: z=(x-c)/s.
  double center, scale;
  bool use_l2 = c.std_dev.has_value();
  double t1, t2;
  double l1_init = 0.0, l2_init = 0.0;
  if (use_l2) {
    center = *c.mean;
    scale = *c.std_dev;
    t1 = 0.0;
    t2 = 1.0;
    l2_init = 0.5;  // standard normal in standardized coordinates
  } else if (std::isfinite(lo)) {
    center = lo;
    scale = *c.mean - lo;
    t1 = 1.0;
    t2 = 0.0;
  } else {
    center = hi;
    scale = *c.mean - hi;  // negative; the affine map flips the axis
    t1 = 1.0;
    t2 = 0.0;
  }

  double za = (lo - center) / scale;
  double zb = (hi - center) / scale;
  if (za > zb) std::swap(za, zb);

  if (!use_l2) {
    if (std::isinf(zb)) {
      l1_init = 1.0;  // exact for a half-line with a mean constraint
    } else {
      l1_init = (0.5 * zb - 1.0) * 12.0 / (zb * zb);
    }
  }

  const DualState sol =
      solve_dual(za, zb, t1, t2, use_l2, l1_init, l2_init, tol, max_iter);

  const double cs = center / scale;
  const double lam2 = use_l2 ? sol.l2 / (scale * scale) : 0.0;
  const double lam1 = sol.l1 / scale - 2.0 * center * lam2;
  const double lam0 =
      std::log(std::abs(scale)) + sol.mom.log_z - sol.l1 * cs +
      (use_l2 ? sol.l2 * cs * cs : 0.0);
  d.lambdas_ << lam0, lam1, lam2;

  const double ex = center + scale * sol.mom.m1;
  const double ex2 = center * center + 2.0 * center * scale * sol.mom.m1 +
                     scale * scale * sol.mom.m2;
  d.entropy_ = lam0 + lam1 * ex + lam2 * ex2;
  d.build_grid();
  return d;
}

double MaxEntDistribution::pdf(double x) const {
  if (x < constraints_.support_lo || x > constraints_.support_hi) return 0.0;
  const double e = -(lambdas_[0] + (lambdas_[1] + lambdas_[2] * x) * x);
  return std::exp(e);
}

void MaxEntDistribution::build_grid() {
  const double lo = constraints_.support_lo;
  const double hi = constraints_.support_hi;
  const double l1 = lambdas_[1];
  const double l2 = lambdas_[2];

  // Envelope [L,U]: exact for finite ends; for infinite ends, the points
  // where the exponent has dropped 45 below its maximum (mass < 1e-19).
  const double m = max_exponent(l1, l2, std::isfinite(lo) ? lo : -kInf,
                                std::isfinite(hi) ? hi : kInf);
  double L = lo, U = hi;
  const double drop = 45.0;
  if (std::isinf(lo) || std::isinf(hi)) {
    if (l2 > 0.0) {
      const double zc = -l1 / (2.0 * l2);
      const double disc = std::max(0.0, expo(l1, l2, zc) - (m - drop));
      const double half = std::sqrt(disc / l2);
      if (std::isinf(lo)) L = zc - half;
      if (std::isinf(hi)) U = zc + half;
    } else {  // l2 == 0, exponential decay away from the finite end
      if (std::isinf(hi)) U = lo + drop / l1;
      if (std::isinf(lo)) L = hi + drop / l1;  // l1 < 0 here
    }
  }
  if (!(L < U)) throw std::logic_error("maxent grid: bad envelope");

  // Pilot pass: uniform edges plus peak hints, integrated cell by cell.
  const int pilot_cells = 256;
  std::vector<double> edges;
  edges.reserve(pilot_cells + 64);
  for (int i = 0; i <= pilot_cells; ++i)
    edges.push_back(L + (U - L) * static_cast<double>(i) / pilot_cells);
  for (double b : peak_breakpoints(l1, l2, L, U)) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  auto f = [this](double x) { return pdf(x); };
  QuadOptions cell_opt;
  cell_opt.abs_tol = 1e-13;

  std::vector<double> cum(edges.size(), 0.0);
  for (std::size_t i = 1; i < edges.size(); ++i)
    cum[i] = cum[i - 1] + integrate(f, edges[i - 1], edges[i], {}, cell_opt);
  const double total = cum.back();
  if (!(total > 0.0))
    throw std::logic_error("maxent grid: zero total probability mass");

  // Equal-probability knot placement from the pilot, then an exact
  // cumulative pass over the chosen knots.
  const int n_knots = 2048;
  Eigen::ArrayXd xs(n_knots);
  xs[0] = L;
  xs[n_knots - 1] = U;
  std::size_t cell = 0;
  for (int j = 1; j < n_knots - 1; ++j) {
    const double target = total * static_cast<double>(j) / (n_knots - 1);
    while (cell + 1 < cum.size() && cum[cell + 1] < target) ++cell;
    const double c0 = cum[cell], c1 = cum[cell + 1];
    const double w = (c1 > c0) ? (target - c0) / (c1 - c0) : 0.5;
    xs[j] = edges[cell] + w * (edges[cell + 1] - edges[cell]);
    if (xs[j] <= xs[j - 1])
      xs[j] = std::nextafter(xs[j - 1], U);  // keep knots strictly increasing
  }

  Eigen::ArrayXd cdf(n_knots);
  cdf[0] = 0.0;
  QuadOptions exact_opt;
  exact_opt.abs_tol = 1e-15;
  for (int j = 1; j < n_knots; ++j)
    cdf[j] = cdf[j - 1] + integrate(f, xs[j - 1], xs[j], {}, exact_opt);
  const double mass = cdf[n_knots - 1];
  cdf /= mass;
  cdf[0] = 0.0;
  cdf[n_knots - 1] = 1.0;

  grid_x_ = std::move(xs);
  grid_cdf_ = std::move(cdf);
}

double MaxEntDistribution::cdf(double x) const {
  if (x <= grid_x_[0]) return 0.0;
  const Eigen::Index n = grid_x_.size();
  if (x >= grid_x_[n - 1]) return 1.0;
  const double* begin = grid_x_.data();
  Eigen::Index i =
      std::upper_bound(begin, begin + n, x) - begin - 1;
  QuadOptions opt;
  opt.abs_tol = 1e-14;
  auto f = [this](double t) { return pdf(t); };
  const double v = grid_cdf_[i] + integrate(f, grid_x_[i], x, {}, opt);
  return std::clamp(v, 0.0, 1.0);
}

double MaxEntDistribution::quantile(double p) const {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("quantile: p must be in (0,1)");
  const Eigen::Index n = grid_cdf_.size();
  const double* begin = grid_cdf_.data();
  Eigen::Index i = std::upper_bound(begin, begin + n, p) - begin - 1;
  if (i < 0) i = 0;
  if (i > n - 2) i = n - 2;

  const double x0 = grid_x_[i];
  const double ca = grid_cdf_[i], cb = grid_cdf_[i + 1];
  double blo = grid_x_[i], bhi = grid_x_[i + 1];
  double x = (cb > ca) ? x0 + (p - ca) / (cb - ca) * (bhi - x0)
                       : 0.5 * (blo + bhi);

  QuadOptions opt;
  opt.abs_tol = 1e-15;
  auto f = [this](double t) { return pdf(t); };
  for (int it = 0; it < 100; ++it) {
    const double cx = ca + integrate(f, x0, std::max(x0, x), {}, opt);
    const double err = cx - p;
    if (std::abs(err) <= 1e-12) return x;
    if (err > 0.0)
      bhi = x;
    else
      blo = x;
    const double dens = pdf(x);
    double next = (dens > 0.0) ? x - err / dens : 0.5 * (blo + bhi);
    if (!(next > blo) || !(next < bhi)) next = 0.5 * (blo + bhi);
    x = next;
  }
  return x;
}

std::string to_json(const MaxEntDistribution& d) {
  const auto& c = d.constraints();
  auto bound = [](double v, const char* inf_token) {
    return std::isinf(v) ? std::string("\"") + inf_token + "\"" : fmt17(v);
  };
  std::string s = "{\n";
  s += "  \"support\": [" + bound(c.support_lo, "-inf") + ", " +
       bound(c.support_hi, "+inf") + "],\n";
  s += "  \"mean\": " + (c.mean ? fmt17(*c.mean) : "null") + ",\n";
  s += "  \"std\": " + (c.std_dev ? fmt17(*c.std_dev) : "null") + ",\n";
  s += "  \"lambdas\": [" + fmt17(d.lambdas()[0]) + ", " +
       fmt17(d.lambdas()[1]) + ", " + fmt17(d.lambdas()[2]) + "],\n";
  s += "  \"entropy\": " + fmt17(d.entropy()) + "\n";
  s += "}\n";
  return s;
}

MaxEntDistribution maxent_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto bound = [](const nlohmann::json& v, double sign) {
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "-inf") return -kInf;
      if (s == "+inf" || s == "inf") return kInf;
      throw std::invalid_argument("maxent json: bad support token: " + s);
    }
    (void)sign;
    return v.get<double>();
  };
  MaxEntDistribution d;
  d.constraints_.support_lo = bound(j.at("support").at(0), -1.0);
  d.constraints_.support_hi = bound(j.at("support").at(1), 1.0);
  if (!j.at("mean").is_null())
    d.constraints_.mean = j.at("mean").get<double>();
  if (!j.at("std").is_null())
    d.constraints_.std_dev = j.at("std").get<double>();
  d.constraints_.validate();
  const auto& l = j.at("lambdas");
  d.lambdas_ << l.at(0).get<double>(), l.at(1).get<double>(),
      l.at(2).get<double>();
  d.entropy_ = j.at("entropy").get<double>();
  d.build_grid();
  return d;
}

}  // namespace dldr
