#include "dldr/nonparam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dldr/textio.hpp"

namespace dldr {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kInvSqrt2 = 0.7071067811865476;

inline double norm_pdf(double t) {
  return kInvSqrt2Pi * std::exp(-0.5 * t * t);
}

inline double norm_cdf(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }

// Linear-interpolation sample quantile (the common type-7 definition).
double sorted_quantile(const Eigen::ArrayXd& sorted, double p) {
  const Eigen::Index n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const Eigen::Index i = static_cast<Eigen::Index>(std::floor(pos));
  if (i >= n - 1) return sorted[n - 1];
  const double w = pos - static_cast<double>(i);
  return sorted[i] + w * (sorted[i + 1] - sorted[i]);
}

double silverman_scale(const Eigen::ArrayXd& sorted) {
  const Eigen::Index n = sorted.size();
  const double mean = sorted.mean();
  const double sd = std::sqrt((sorted - mean).square().sum() /
                              static_cast<double>(n - 1));
  const double iqr =
      sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  double a = sd;
  if (iqr > 0.0) a = std::min(a, iqr / 1.34);
  return a;
}

}  // namespace

SummaryStats summary_stats(const Eigen::Ref<const Eigen::ArrayXd>& samples) {
  const Eigen::Index n = samples.size();
  if (n < 2)
    throw std::invalid_argument("summary_stats: need at least 2 samples");
  SummaryStats s;
  s.n = n;
  s.mean = samples.mean();
  s.std_dev =
      std::sqrt((samples - s.mean).square().sum() / static_cast<double>(n - 1));
  if (s.mean == 0.0)
    throw std::invalid_argument("summary_stats: mean is zero, COV undefined");
  s.cov = s.std_dev / std::abs(s.mean);
  return s;
}

KdeDensity kde_fit(const Eigen::Ref<const Eigen::ArrayXd>& samples,
                   std::optional<double> support_lo,
                   std::optional<double> support_hi,
                   std::optional<double> bandwidth) {
  const Eigen::Index n = samples.size();
  if (n < 5) throw std::invalid_argument("kde_fit: need at least 5 samples");

  KdeDensity d;
  d.samples_ = samples;
  std::sort(d.samples_.data(), d.samples_.data() + n);
  d.lo_ = support_lo;
  d.hi_ = support_hi;
  if (support_lo && support_hi && !(*support_lo < *support_hi))
    throw std::invalid_argument("kde_fit: support_lo must be < support_hi");
  if (support_lo && d.samples_[0] < *support_lo)
    throw std::invalid_argument("kde_fit: sample below declared support");
  if (support_hi && d.samples_[n - 1] > *support_hi)
    throw std::invalid_argument("kde_fit: sample above declared support");

  if (bandwidth) {
    if (!(*bandwidth > 0.0))
      throw std::invalid_argument("kde_fit: bandwidth must be positive");
    d.bandwidth_ = *bandwidth;
  } else {
    const double a = silverman_scale(d.samples_);
    if (!(a > 0.0))
      throw std::invalid_argument("kde_fit: degenerate (zero-variance) sample");
    d.bandwidth_ =
        0.9 * a * std::pow(static_cast<double>(n), -0.2);
  }
  // Retained mass at the top of the evaluation range normalizes inversion;
  // reflection keeps it within ~1e-12 of exactly one.
  d.mass_ = 1.0;
  const double total = d.cdf(d.range_hi(8.5));
  d.mass_ = total > 0.0 ? total : 1.0;
  return d;
}

double KdeDensity::range_lo(double pad) const {
  if (lo_) return *lo_;
  return samples_[0] - pad * bandwidth_;
}

double KdeDensity::range_hi(double pad) const {
  if (hi_) return *hi_;
  return samples_[samples_.size() - 1] + pad * bandwidth_;
}

double KdeDensity::pdf(double x) const {
  if (lo_ && x < *lo_) return 0.0;
  if (hi_ && x > *hi_) return 0.0;
  const double h = bandwidth_;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < samples_.size(); ++i) {
    const double xi = samples_[i];
    acc += norm_pdf((x - xi) / h);
    if (lo_) acc += norm_pdf((x - (2.0 * *lo_ - xi)) / h);
    if (hi_) acc += norm_pdf((x - (2.0 * *hi_ - xi)) / h);
  }
  return acc / (static_cast<double>(samples_.size()) * h);
}

double KdeDensity::cdf(double x) const {
  if (lo_ && x <= *lo_) return 0.0;
  const double h = bandwidth_;
  const double lo_clip = lo_ ? *lo_ : -std::numeric_limits<double>::infinity();
  double xq = x;
  if (hi_ && xq > *hi_) xq = *hi_;
  double acc = 0.0;
  auto kernel_mass = [&](double center) {
    const double upper = norm_cdf((xq - center) / h);
    const double lower =
        std::isinf(lo_clip) ? 0.0 : norm_cdf((lo_clip - center) / h);
    return upper - lower;
  };
  for (Eigen::Index i = 0; i < samples_.size(); ++i) {
    const double xi = samples_[i];
    acc += kernel_mass(xi);
    if (lo_) acc += kernel_mass(2.0 * *lo_ - xi);
    if (hi_) acc += kernel_mass(2.0 * *hi_ - xi);
  }
  return acc / (static_cast<double>(samples_.size()) * mass_);
}

double KdeDensity::quantile(double p) const {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("kde quantile: p must be in (0,1)");
  double lo = range_lo(8.5);
  double hi = range_hi(8.5);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double err = cdf(x) - p;
    if (std::abs(err) <= 1e-13) break;
    if (err > 0.0)
      hi = x;
    else
      lo = x;
    const double dens = pdf(x) / mass_;
    double next = dens > 0.0 ? x - err / dens : 0.5 * (lo + hi);
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

void KdeDensity::grid(Eigen::Index n, Eigen::ArrayXd& xs,
                      Eigen::ArrayXd& ps) const {
  const double lo = range_lo();
  const double hi = range_hi();
  xs.resize(n);
  ps.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    ps[i] = pdf(xs[i]);
  }
}

Kde2Density kde2_fit(const Eigen::Ref<const Eigen::ArrayXd>& x,
                     const Eigen::Ref<const Eigen::ArrayXd>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("kde2_fit: coordinate arrays differ in size");
  const Eigen::Index n = x.size();
  if (n < 10) throw std::invalid_argument("kde2_fit: need at least 10 pairs");

  Kde2Density d;
  d.xs_ = x;
  d.ys_ = y;
  auto axis_bw = [n](const Eigen::ArrayXd& v) {
    Eigen::ArrayXd sorted = v;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    const double a = silverman_scale(sorted);
    if (!(a > 0.0))
      throw std::invalid_argument("kde2_fit: degenerate marginal sample");
    return 0.9 * a * std::pow(static_cast<double>(n), -1.0 / 6.0);
  };
  d.hx_ = axis_bw(d.xs_);
  d.hy_ = axis_bw(d.ys_);
  return d;
}

double Kde2Density::pdf(double x, double y) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xs_.size(); ++i)
    acc += norm_pdf((x - xs_[i]) / hx_) * norm_pdf((y - ys_[i]) / hy_);
  return acc / (static_cast<double>(xs_.size()) * hx_ * hy_);
}

double Kde2Density::conditional_cdf(double x, double y_threshold) const {
  // Weights are normalized against the largest exponent so far-out slices
  // stay finite instead of underflowing to 0/0.
  const Eigen::Index n = xs_.size();
  double best = std::numeric_limits<double>::infinity();
  Eigen::ArrayXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (x - xs_[i]) / hx_;
    d2[i] = 0.5 * t * t;
    best = std::min(best, d2[i]);
  }
  double wsum = 0.0, hit = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = std::exp(-(d2[i] - best));
    wsum += w;
    hit += w * norm_cdf((y_threshold - ys_[i]) / hy_);
  }
  return hit / wsum;
}

void Kde2Density::grid(Eigen::Index nx, Eigen::Index ny, Eigen::ArrayXd& gx,
                       Eigen::ArrayXd& gy, Eigen::MatrixXd& pdf_values) const {
  const double pad = 5.0;
  const double x0 = xs_.minCoeff() - pad * hx_;
  const double x1 = xs_.maxCoeff() + pad * hx_;
  const double y0 = ys_.minCoeff() - pad * hy_;
  const double y1 = ys_.maxCoeff() + pad * hy_;
  gx.resize(nx);
  gy.resize(ny);
  pdf_values.resize(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i)
    gx[i] = x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx - 1);
  for (Eigen::Index j = 0; j < ny; ++j)
    gy[j] = y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(ny - 1);
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) pdf_values(i, j) = pdf(gx[i], gy[j]);
}

Ecdf::Ecdf(const Eigen::Ref<const Eigen::ArrayXd>& samples) {
  if (samples.size() < 1)
    throw std::invalid_argument("ecdf: need at least one sample");
  sorted_ = samples;
  std::sort(sorted_.data(), sorted_.data() + sorted_.size());
}

double Ecdf::operator()(double x) const {
  const double* begin = sorted_.data();
  const double* end = begin + sorted_.size();
  const auto count = std::upper_bound(begin, end, x) - begin;
  return static_cast<double>(count) / static_cast<double>(sorted_.size());
}

ConvergenceReport convergence_diagnostic(
    const Eigen::Ref<const Eigen::ArrayXd>& samples, int shuffles,
    double tail_fraction, double threshold, std::uint64_t seed) {
  const Eigen::Index n = samples.size();
  if (n < 10)
    throw std::invalid_argument("convergence_diagnostic: need >= 10 samples");
  if (shuffles < 1)
    throw std::invalid_argument("convergence_diagnostic: shuffles must be >= 1");
  if (!(tail_fraction > 0.0) || !(tail_fraction < 1.0))
    throw std::invalid_argument(
        "convergence_diagnostic: tail_fraction must be in (0,1)");

  ConvergenceReport rep;
  rep.shuffle_count = shuffles;
  rep.threshold = threshold;
  rep.tail_fraction = tail_fraction;
  rep.trajectories.reserve(static_cast<std::size_t>(shuffles));

  double worst = 0.0;
  for (int s = 0; s < shuffles; ++s) {
    Eigen::ArrayXd perm = samples;
    SubstreamRng rng(seed, static_cast<std::uint64_t>(s), 0);
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.next() *
                                               static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }

    // Prefix standard deviation by Welford's recurrence; the first entry
    // (a single sample) is recorded as 0.
    Eigen::ArrayXd traj(n);
    double mean = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double delta = perm[i] - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (perm[i] - mean);
      traj[i] = (i > 0) ? std::sqrt(m2 / static_cast<double>(i)) : 0.0;
    }

    const Eigen::Index tail =
        std::max<Eigen::Index>(2, static_cast<Eigen::Index>(
                                      std::ceil(tail_fraction * n)));
    const auto window = traj.tail(tail);
    const double wmean = window.mean();
    const double fluct =
        (wmean > 0.0) ? (window.maxCoeff() - window.minCoeff()) / wmean : 0.0;
    worst = std::max(worst, fluct);
    rep.trajectories.push_back(std::move(traj));
  }
  rep.rel_fluctuation = worst;
  rep.converged = worst < threshold;
  return rep;
}

std::string ConvergenceReport::to_json() const {
  std::string s = "{\n";
  s += "  \"shuffle_count\": " + std::to_string(shuffle_count) + ",\n";
  s += "  \"tail_fraction\": " + fmt17(tail_fraction) + ",\n";
  s += "  \"threshold\": " + fmt17(threshold) + ",\n";
  s += "  \"rel_fluctuation\": " + fmt17(rel_fluctuation) + ",\n";
  s += std::string("  \"converged\": ") + (converged ? "true" : "false") +
       ",\n";
  s += "  \"trajectories\": [\n";
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    s += "    [";
    const auto& traj = trajectories[t];
    for (Eigen::Index i = 0; i < traj.size(); ++i) {
      s += fmt17(traj[i]);
      if (i + 1 < traj.size()) s += ", ";
    }
    s += (t + 1 < trajectories.size()) ? "],\n" : "]\n";
  }
  s += "  ]\n}\n";
  return s;
}

}  // namespace dldr
