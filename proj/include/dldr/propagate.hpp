#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dldr/damage.hpp"
#include "dldr/maxent.hpp"
#include "dldr/nonparam.hpp"
#include "dldr/rng.hpp"

namespace dldr {

enum class ModelKind { ldr, dldr, nonlinear };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// How one input parameter's uncertainty is described. Data-rich parameters
// use a KDE over their samples; data-poor ones use a maximum-entropy member,
// either with a fixed standard deviation or with the COV itself drawn
// uniformly per Monte Carlo draw (hierarchical). A point marginal pins the
// parameter to a constant, collapsing the pipeline onto the deterministic
// models.
struct MarginalSpec {
  enum class Kind { point, kde_data, maxent_fixed, maxent_hierarchical };

  Kind kind = Kind::point;
  double value = 0.0;                        // point
  Eigen::ArrayXd data;                       // kde_data
  std::optional<double> data_lo, data_hi;    // kde reflection bounds
  std::optional<MomentConstraints> constraints;  // maxent_fixed
  struct Hier {
    double support_lo = 0.0;
    double support_hi = 1.0;
    double mean = 0.0;
    double cov_lo = 0.05;
    double cov_hi = 0.10;
  };
  std::optional<Hier> hier;  // maxent_hierarchical

  static MarginalSpec point(double v);
  static MarginalSpec kde(Eigen::ArrayXd samples,
                          std::optional<double> lo = {},
                          std::optional<double> hi = {});
  static MarginalSpec maxent(const MomentConstraints& c);
  static MarginalSpec maxent_hier(double support_lo, double support_hi,
                                  double mean, double cov_lo, double cov_hi);

  void validate() const;
};

// Validated, eagerly-fitted joint input model. Marginals are independent;
// the joint density is their product. Hierarchical marginals precompute
// members on a 64-level COV grid and each draw uses the nearest level.
class InputJointModel {
 public:
  static constexpr int kCovLevels = 64;

  ModelKind model_kind() const { return kind_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  const std::map<std::string, double>& fixed() const { return fixed_; }
  bool is_hierarchical(std::size_t param) const;
  bool is_stochastic(std::size_t param) const;

  // Draws parameter `param` for Monte Carlo draw `draw`; hierarchical
  // marginals also report the COV they drew.
  double sample_param(std::size_t param, std::uint64_t seed,
                      std::uint64_t draw, double* cov_out = nullptr) const;

 private:
  friend InputJointModel build_input_model(
      const std::map<std::string, MarginalSpec>&, ModelKind,
      const std::map<std::string, double>&);

  struct HierMembers {
    double cov_lo = 0.0, cov_hi = 0.0;
    std::vector<MaxEntDistribution> members;  // kCovLevels entries
  };
  using Prepared =
      std::variant<double, KdeDensity, MaxEntDistribution, HierMembers>;

  ModelKind kind_ = ModelKind::ldr;
  std::vector<std::string> names_;     // substream order: N1, N2, then extras
  std::vector<Prepared> prepared_;
  std::map<std::string, double> fixed_;
};

// Required marginal names per model: {N1, N2} always, plus {alpha, B} for
// the two-segment rule or {q_ratio} for the nonlinear rule (which also
// needs fixed["n_e"]). MaxEnt fits run eagerly so infeasible constraints
// surface here.
InputJointModel build_input_model(
    const std::map<std::string, MarginalSpec>& specs, ModelKind kind,
    const std::map<std::string, double>& fixed = {});

// One row per draw. Excluded rows (knee outside the open unit square, or an
// endurance-limit violation for the nonlinear rule) are retained and
// flagged, never dropped; their derived outputs are NaN.
struct PropagationResult {
  ModelKind model_kind = ModelKind::ldr;
  std::uint64_t seed = 0;
  Eigen::Index n_samples = 0;
  std::vector<double> n1_values;
  std::vector<std::string> column_names;
  Eigen::MatrixXd columns;                    // n_samples x column count
  Eigen::Array<bool, Eigen::Dynamic, 1> excluded;
  Eigen::Index excluded_count = 0;
  bool small_sample_warning = false;          // n_samples below 1000

  Eigen::Index column_index(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const;
};

// Monte Carlo propagation: inverse-transform sampling of every marginal,
// model evaluation at each requested n1, all columns recorded. Draw i uses
// counter-derived substreams keyed by (seed, i, parameter), so results are
// bit-identical for any worker count.
PropagationResult run(const InputJointModel& model,
                      const std::vector<double>& n1_values,
                      Eigen::Index n_samples, std::uint64_t seed,
                      int threads = 1);

// 2-D KDE over the knee coordinates of unexcluded draws.
Kde2Density knee_joint_density(const PropagationResult& r);

struct ConditionalKneeProb {
  double beta1 = 0.0;       // conditioning location
  double window = 0.0;      // counting half-width actually used
  Eigen::Index in_window = 0;
  double counting = 0.0;    // primary estimate
  double counting_se = 0.0; // binomial standard error
  double kde = 0.0;         // smoothed cross-check
};

// Probability that the knee lies below the line beta1 + beta2 = 1, given
// beta1_knee near `beta1_fixed`. The counting estimator conditions on
// |beta1_knee - beta1_fixed| < window (default: the beta1 KDE bandwidth);
// the KDE estimator integrates the smoothed conditional slice.
ConditionalKneeProb conditional_knee_prob(const PropagationResult& r,
                                          double beta1_fixed,
                                          std::optional<double> window = {});

// KDE (reflected at zero) of the remaining-life column at one of the run's
// n1 values. Flagged draws are omitted; their fraction is reported.
KdeDensity n2_distribution(const PropagationResult& r, double n1,
                           double* flagged_fraction = nullptr);

struct BandTable {
  std::vector<double> n1;
  std::vector<double> levels;   // sorted probabilities
  Eigen::MatrixXd quantiles;    // n1 x levels, empirical
  std::vector<double> valid_fraction;  // unflagged share per n1
};

// Empirical quantile bands of n2 over an n1 grid (fresh propagation run).
BandTable n2_band(const InputJointModel& model,
                  const std::vector<double>& n1_grid,
                  const std::vector<double>& levels, Eigen::Index n_samples,
                  std::uint64_t seed, int threads = 1);

// One row per draw, flagged rows marked, 17-significant-digit numbers.
std::string result_to_csv(const PropagationResult& r);

// Quantiles, exclusion fraction and conditional estimates as a JSON text.
std::string result_summary_json(
    const PropagationResult& r,
    const std::vector<double>& beta1_levels = {0.25, 0.50, 0.75},
    std::optional<double> window = {});

}  // namespace dldr
