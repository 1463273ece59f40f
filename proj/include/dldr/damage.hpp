#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dldr {

// Deterministic fatigue damage models for a two-level high-low load
// sequence. Cycle counts are positive reals throughout; rounding to whole
// cycles is a display concern.

// One stress level and the life under it alone. The stress is carried for
// reporting; the models consume only lives.
struct LoadLevel {
  double stress_mpa = 0.0;
  double life = 0.0;  // cycles, > 0
};

// Applied and remaining cycle ratios with their linear damage sum.
struct CycleRatios {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double damage = 0.0;  // beta1 + beta2
};

inline CycleRatios cycle_ratios(double n1, double N1, double n2, double N2) {
  if (!(N1 > 0.0) || !(N2 > 0.0))
    throw std::invalid_argument("cycle_ratios: lives must be positive");
  const double b1 = n1 / N1;
  const double b2 = n2 / N2;
  return {b1, b2, b1 + b2};
}

// Linear damage rule: remaining cycles at the second level once n1 of N1
// have been spent, solving beta1 + beta2 = 1.
template <typename Scalar>
Scalar ldr_remaining(Scalar n1, Scalar N1, Scalar N2) {
  if (!(N1 > Scalar(0)) || !(N2 > Scalar(0)))
    throw std::invalid_argument("ldr_remaining: lives must be positive");
  if (n1 < Scalar(0) || n1 > N1)
    throw std::invalid_argument("ldr_remaining: n1 must be in [0, N1]");
  return (Scalar(1) - n1 / N1) * N2;
}

struct DldrParams {
  double alpha = 0.0;
  double b = 0.5;  // phase split parameter, in [0,1]
};

struct KneePoint {
  double beta1 = 0.0;
  double beta2 = 0.0;
  // Eqs for the two-segment curve are only derived for a knee strictly
  // inside the open unit square; callers must check before evaluating.
  bool inside_unit_square = false;
};

// Knee-point coordinates ((1-B)*(N1/N2)^alpha, B*(N1/N2)^alpha).
KneePoint dldr_knee(const DldrParams& p, double N1, double N2);

// Two-segment remaining-cycle-ratio curve through (0,1), the knee, and
// (1,0). Requires a knee inside the open unit square.
double dldr_beta2(double beta1, const KneePoint& k);

// Remaining cycles under the two-segment rule.
double dldr_remaining(double n1, double N1, double N2, const KneePoint& k);

struct NonlinearParams {
  double n_e = 0.0;     // cycles at the endurance limit
  double q_ratio = 1.0; // exponent ratio between the two stress levels
};

// One-parameter nonlinear rule built on iso-damage curves that converge at
// the endurance limit (base-10 logs). The result is clamped to [0, N2]; a
// raw value outside by more than 1e-9*N2 sets *warning when provided.
double nonlinear_remaining(double n1, double N1, double N2,
                           const NonlinearParams& p, bool* warning = nullptr);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct DldrFit {
  DldrParams params;
  double sse = 0.0;
  // Set when the objective is flat along B (alpha ~ 0 collapses the curve
  // onto the linear rule, where B cancels); B is then reported as the
  // midpoint of its search interval.
  bool b_unidentifiable = false;
};

// Least-squares (alpha, B) over mean cycle-ratio points: coarse 101x101 grid
// scan over the support box followed by derivative-free compass refinement.
// Deterministic for fixed inputs.
DldrFit fit_dldr(const std::vector<std::pair<double, double>>& points,
                 double n_ratio, const Interval& alpha_support,
                 const Interval& b_support);

// Least-squares exponent ratio over log10 remaining-life residuals,
// golden-section search on [0.05, 20]. Points are (n1, mean n2) pairs.
double fit_qratio(const std::vector<std::pair<double, double>>& points,
                  double N1, double N2, double n_e);

}  // namespace dldr
