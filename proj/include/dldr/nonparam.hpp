#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dldr/rng.hpp"

namespace dldr {

struct SummaryStats {
  double mean = 0.0;
  double std_dev = 0.0;  // unbiased (n-1) estimator
  double cov = 0.0;      // std_dev / |mean|
  Eigen::Index n = 0;
};

// Mean, unbiased standard deviation and coefficient of variation.
// Requires at least two samples and a nonzero mean (the COV is undefined
// otherwise).
SummaryStats summary_stats(const Eigen::Ref<const Eigen::ArrayXd>& samples);

// Gaussian-kernel density estimate with optional reflection boundaries.
// Reflection folds kernel mass that would leak past a declared support end
// back inside, so lifetime densities stay supported on positive cycles.
class KdeDensity {
 public:
  double bandwidth() const { return bandwidth_; }
  const Eigen::ArrayXd& samples() const { return samples_; }
  std::optional<double> support_lo() const { return lo_; }
  std::optional<double> support_hi() const { return hi_; }

  double pdf(double x) const;
  double cdf(double x) const;  // exact mixture of normal CDFs
  double quantile(double p) const;

  // Evaluation range: declared support where present, otherwise the sample
  // range padded by `pad` bandwidths.
  double range_lo(double pad = 5.0) const;
  double range_hi(double pad = 5.0) const;

  // (x, pdf) table over the evaluation range.
  void grid(Eigen::Index n, Eigen::ArrayXd& xs, Eigen::ArrayXd& ps) const;

 private:
  friend KdeDensity kde_fit(const Eigen::Ref<const Eigen::ArrayXd>&,
                            std::optional<double>, std::optional<double>,
                            std::optional<double>);
  Eigen::ArrayXd samples_;  // sorted
  double bandwidth_ = 0.0;
  std::optional<double> lo_, hi_;
  double mass_ = 1.0;  // CDF value at the upper end of the range, for inversion
};

// Bandwidth defaults to the normal-reference rule
// h = 0.9 * min(std, IQR/1.34) * n^(-1/5); pass `bandwidth` to override.
KdeDensity kde_fit(const Eigen::Ref<const Eigen::ArrayXd>& samples,
                   std::optional<double> support_lo = {},
                   std::optional<double> support_hi = {},
                   std::optional<double> bandwidth = {});

// Two-dimensional product-kernel density with per-axis normal-reference
// bandwidths h_i = 0.9 * min(std_i, IQR_i/1.34) * n^(-1/6).
class Kde2Density {
 public:
  double bandwidth_x() const { return hx_; }
  double bandwidth_y() const { return hy_; }
  Eigen::Index size() const { return xs_.size(); }

  double pdf(double x, double y) const;
  // P[Y <= y_threshold | X = x] under the product-kernel estimate; this is
  // the closed form of integrating the conditional density slice.
  double conditional_cdf(double x, double y_threshold) const;

  void grid(Eigen::Index nx, Eigen::Index ny, Eigen::ArrayXd& gx,
            Eigen::ArrayXd& gy, Eigen::MatrixXd& pdf_values) const;

 private:
  friend Kde2Density kde2_fit(const Eigen::Ref<const Eigen::ArrayXd>&,
                              const Eigen::Ref<const Eigen::ArrayXd>&);
  Eigen::ArrayXd xs_, ys_;
  double hx_ = 0.0, hy_ = 0.0;
};

Kde2Density kde2_fit(const Eigen::Ref<const Eigen::ArrayXd>& x,
                     const Eigen::Ref<const Eigen::ArrayXd>& y);

// Right-continuous empirical CDF.
class Ecdf {
 public:
  explicit Ecdf(const Eigen::Ref<const Eigen::ArrayXd>& samples);
  double operator()(double x) const;
  const Eigen::ArrayXd& sorted() const { return sorted_; }

 private:
  Eigen::ArrayXd sorted_;
};

// Running-standard-deviation stabilization diagnostic. The dataset is
// reshuffled `shuffle_count` times; a trajectory records the prefix
// standard deviation after each added sample. The dataset counts as
// converged when, within the trailing `tail_fraction` of every trajectory,
// (max - min) / mean of the running std stays below `threshold`.
struct ConvergenceReport {
  int shuffle_count = 0;
  std::vector<Eigen::ArrayXd> trajectories;  // one per shuffle, length n
  double rel_fluctuation = 0.0;              // worst shuffle
  double threshold = 0.0;
  double tail_fraction = 0.0;
  bool converged = false;

  std::string to_json() const;
};

ConvergenceReport convergence_diagnostic(
    const Eigen::Ref<const Eigen::ArrayXd>& samples, int shuffles = 3,
    double tail_fraction = 0.2, double threshold = 0.05,
    std::uint64_t seed = kDefaultSeed);

}  // namespace dldr
