#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace dldr {

// Raised when no exponential-family density on the requested support can
// attain the requested moments (detected by divergence of the dual solve).
struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Support interval plus optional mean / standard-deviation constraints for
// one scalar parameter. Either support end may be infinite.
struct MomentConstraints {
  double support_lo = 0.0;
  double support_hi = 1.0;
  std::optional<double> mean;
  std::optional<double> std_dev;

  // Throws std::invalid_argument when the combination cannot describe a
  // normalizable density (see validate() in maxent.cpp for the rules).
  void validate() const;
};

// Maximum-entropy density exp(-l0 - l1*x - l2*x^2) restricted to a support
// interval, with an inversion grid for fast quantile evaluation. Immutable
// after fitting; safe to share across threads.
class MaxEntDistribution {
 public:
  const MomentConstraints& constraints() const { return constraints_; }
  const Eigen::Vector3d& lambdas() const { return lambdas_; }
  double entropy() const { return entropy_; }
  const Eigen::ArrayXd& grid_x() const { return grid_x_; }
  const Eigen::ArrayXd& grid_cdf() const { return grid_cdf_; }

  double pdf(double x) const;
  double cdf(double x) const;
  // Inverse CDF: monotone interpolation on the grid refined by guarded
  // Newton/bisection until |cdf - p| <= 1e-12.
  double quantile(double p) const;

  template <class Stream>
  Eigen::ArrayXd sample(Stream& stream, Eigen::Index n) const {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = quantile(stream.next());
    return out;
  }

 private:
  friend MaxEntDistribution fit_maxent(const MomentConstraints&, double, int);
  friend MaxEntDistribution maxent_from_json(const std::string&);

  MaxEntDistribution() = default;
  void build_grid();

  MomentConstraints constraints_;
  Eigen::Vector3d lambdas_ = Eigen::Vector3d::Zero();
  double entropy_ = 0.0;
  Eigen::ArrayXd grid_x_;
  Eigen::ArrayXd grid_cdf_;
};

// Fit the maximum-entropy member for the given constraints by minimizing the
// convex dual (log-partition plus multiplier-weighted moments) with damped
// Newton steps on (l1, l2); l0 is eliminated as the log of the normalizing
// integral. `tol` is the relative moment residual.
MaxEntDistribution fit_maxent(const MomentConstraints& c, double tol = 1e-10,
                              int max_iter = 60);

inline double pdf(const MaxEntDistribution& d, double x) { return d.pdf(x); }
inline double cdf(const MaxEntDistribution& d, double x) { return d.cdf(x); }
inline double quantile(const MaxEntDistribution& d, double p) {
  return d.quantile(p);
}
inline double entropy_of(const MaxEntDistribution& d) { return d.entropy(); }

template <class Stream>
Eigen::ArrayXd sample(const MaxEntDistribution& d, Stream& stream,
                      Eigen::Index n) {
  return d.sample(stream, n);
}

// JSON document {support, mean, std, lambdas, entropy}; numbers carry 17
// significant digits, infinite support ends are the strings "-inf"/"+inf".
std::string to_json(const MaxEntDistribution& d);
MaxEntDistribution maxent_from_json(const std::string& text);

}  // namespace dldr
