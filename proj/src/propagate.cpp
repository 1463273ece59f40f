#include "dldr/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "dldr/textio.hpp"

namespace dldr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double empirical_quantile(std::vector<double>& sorted_values, double p) {
  const std::size_t n = sorted_values.size();
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t i = static_cast<std::size_t>(std::floor(pos));
  if (i >= n - 1) return sorted_values[n - 1];
  const double w = pos - static_cast<double>(i);
  return sorted_values[i] + w * (sorted_values[i + 1] - sorted_values[i]);
}

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::ldr: return "ldr";
    case ModelKind::dldr: return "dldr";
    case ModelKind::nonlinear: return "nonlinear";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "ldr") return ModelKind::ldr;
  if (s == "dldr") return ModelKind::dldr;
  if (s == "nonlinear") return ModelKind::nonlinear;
  throw std::invalid_argument("unknown model kind: " + s);
}

MarginalSpec MarginalSpec::point(double v) {
  MarginalSpec m;
  m.kind = Kind::point;
  m.value = v;
  return m;
}

MarginalSpec MarginalSpec::kde(Eigen::ArrayXd samples, std::optional<double> lo,
                               std::optional<double> hi) {
  MarginalSpec m;
  m.kind = Kind::kde_data;
  m.data = std::move(samples);
  m.data_lo = lo;
  m.data_hi = hi;
  return m;
}

MarginalSpec MarginalSpec::maxent(const MomentConstraints& c) {
  MarginalSpec m;
  m.kind = Kind::maxent_fixed;
  m.constraints = c;
  return m;
}

MarginalSpec MarginalSpec::maxent_hier(double support_lo, double support_hi,
                                       double mean, double cov_lo,
                                       double cov_hi) {
  MarginalSpec m;
  m.kind = Kind::maxent_hierarchical;
  m.hier = Hier{support_lo, support_hi, mean, cov_lo, cov_hi};
  return m;
}

void MarginalSpec::validate() const {
  switch (kind) {
    case Kind::point:
      if (!std::isfinite(value))
        throw std::invalid_argument("marginal: point value must be finite");
      break;
    case Kind::kde_data:
      if (data.size() < 5)
        throw std::invalid_argument(
            "marginal: kde needs at least 5 data points");
      break;
    case Kind::maxent_fixed:
      if (!constraints)
        throw std::invalid_argument("marginal: missing moment constraints");
      constraints->validate();
      break;
    case Kind::maxent_hierarchical: {
      if (!hier)
        throw std::invalid_argument("marginal: missing hierarchical block");
      if (!(hier->cov_lo < hier->cov_hi) || !(hier->cov_lo > 0.0) ||
          !(hier->cov_hi < 1.0))
        throw std::invalid_argument(
            "marginal: COV range must satisfy 0 < lo < hi < 1");
      if (hier->mean == 0.0)
        throw std::invalid_argument(
            "marginal: hierarchical mean of zero gives a zero std");
      MomentConstraints probe;
      probe.support_lo = hier->support_lo;
      probe.support_hi = hier->support_hi;
      probe.mean = hier->mean;
      probe.std_dev = hier->cov_lo * std::abs(hier->mean);
      probe.validate();
      break;
    }
  }
}

bool InputJointModel::is_hierarchical(std::size_t param) const {
  return std::holds_alternative<HierMembers>(prepared_.at(param));
}

bool InputJointModel::is_stochastic(std::size_t param) const {
  return !std::holds_alternative<double>(prepared_.at(param));
}

double InputJointModel::sample_param(std::size_t param, std::uint64_t seed,
                                     std::uint64_t draw,
                                     double* cov_out) const {
  const Prepared& p = prepared_.at(param);
  if (cov_out) *cov_out = kNaN;
  if (std::holds_alternative<double>(p)) return std::get<double>(p);
  SubstreamRng rng(seed, draw, static_cast<std::uint64_t>(param));
  if (std::holds_alternative<KdeDensity>(p))
    return std::get<KdeDensity>(p).quantile(rng.next());
  if (std::holds_alternative<MaxEntDistribution>(p))
    return std::get<MaxEntDistribution>(p).quantile(rng.next());
  const auto& h = std::get<HierMembers>(p);
  const double cov = h.cov_lo + (h.cov_hi - h.cov_lo) * rng.next();
  if (cov_out) *cov_out = cov;
  auto level = static_cast<std::size_t>((cov - h.cov_lo) /
                                        (h.cov_hi - h.cov_lo) * kCovLevels);
  level = std::min<std::size_t>(level, kCovLevels - 1);
  return h.members[level].quantile(rng.next());
}

InputJointModel build_input_model(
    const std::map<std::string, MarginalSpec>& specs, ModelKind kind,
    const std::map<std::string, double>& fixed) {
  InputJointModel m;
  m.kind_ = kind;
  m.fixed_ = fixed;

  switch (kind) {
    case ModelKind::ldr: m.names_ = {"N1", "N2"}; break;
    case ModelKind::dldr: m.names_ = {"N1", "N2", "alpha", "B"}; break;
    case ModelKind::nonlinear: m.names_ = {"N1", "N2", "q_ratio"}; break;
  }
  if (kind == ModelKind::nonlinear) {
    const auto it = fixed.find("n_e");
    if (it == fixed.end() || !(it->second > 0.0))
      throw std::invalid_argument(
          "build_input_model: nonlinear model needs fixed n_e > 0");
  }

  for (const auto& name : m.names_) {
    const auto it = specs.find(name);
    if (it == specs.end())
      throw std::invalid_argument("build_input_model: missing marginal " +
                                  name);
    const MarginalSpec& spec = it->second;
    spec.validate();
    switch (spec.kind) {
      case MarginalSpec::Kind::point:
        m.prepared_.emplace_back(spec.value);
        break;
      case MarginalSpec::Kind::kde_data:
        m.prepared_.emplace_back(
            kde_fit(spec.data, spec.data_lo, spec.data_hi));
        break;
      case MarginalSpec::Kind::maxent_fixed:
        m.prepared_.emplace_back(fit_maxent(*spec.constraints));
        break;
      case MarginalSpec::Kind::maxent_hierarchical: {
        const auto& h = *spec.hier;
        InputJointModel::HierMembers hm;
        hm.cov_lo = h.cov_lo;
        hm.cov_hi = h.cov_hi;
        hm.members.reserve(InputJointModel::kCovLevels);
        for (int level = 0; level < InputJointModel::kCovLevels; ++level) {
          const double cov =
              h.cov_lo + (h.cov_hi - h.cov_lo) *
                             (static_cast<double>(level) + 0.5) /
                             InputJointModel::kCovLevels;
          MomentConstraints c;
          c.support_lo = h.support_lo;
          c.support_hi = h.support_hi;
          c.mean = h.mean;
          c.std_dev = cov * std::abs(h.mean);
          hm.members.push_back(fit_maxent(c));
        }
        m.prepared_.emplace_back(std::move(hm));
        break;
      }
    }
  }
  for (const auto& [name, spec] : specs)
    if (std::find(m.names_.begin(), m.names_.end(), name) == m.names_.end())
      throw std::invalid_argument("build_input_model: marginal " + name +
                                  " is not used by model " + to_string(kind));
  return m;
}

Eigen::Index PropagationResult::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == name) return static_cast<Eigen::Index>(i);
  throw std::invalid_argument("no such column: " + name);
}

Eigen::VectorXd PropagationResult::column(const std::string& name) const {
  return columns.col(column_index(name));
}

PropagationResult run(const InputJointModel& model,
                      const std::vector<double>& n1_values,
                      Eigen::Index n_samples, std::uint64_t seed,
                      int threads) {
  if (n_samples < 1)
    throw std::invalid_argument("run: n_samples must be >= 1");
  if (threads < 1) threads = 1;
  for (double n1 : n1_values)
    if (!(n1 >= 0.0) || !std::isfinite(n1))
      throw std::invalid_argument("run: n1 values must be finite and >= 0");

  PropagationResult r;
  r.model_kind = model.model_kind();
  r.seed = seed;
  r.n_samples = n_samples;
  r.n1_values = n1_values;
  r.small_sample_warning = n_samples < 1000;

  const auto& names = model.parameter_names();
  const std::size_t n_params = names.size();
  std::vector<std::size_t> hier_params;
  for (std::size_t p = 0; p < n_params; ++p)
    if (model.is_hierarchical(p)) hier_params.push_back(p);

  r.column_names = names;
  for (std::size_t p : hier_params)
    r.column_names.push_back("cov_" + names[p]);
  const bool is_dldr = model.model_kind() == ModelKind::dldr;
  if (is_dldr) {
    r.column_names.push_back("beta1_knee");
    r.column_names.push_back("beta2_knee");
  }
  for (double n1 : n1_values)
    r.column_names.push_back("n2_at_" + fmt_short(n1));

  const auto n_cols = static_cast<Eigen::Index>(r.column_names.size());
  r.columns.resize(n_samples, n_cols);
  r.excluded.resize(n_samples);

  const double n_e = model.model_kind() == ModelKind::nonlinear
                         ? model.fixed().at("n_e")
                         : 0.0;

  auto worker = [&](Eigen::Index begin, Eigen::Index end) {
    std::vector<double> values(n_params);
    std::vector<double> covs(n_params);
    for (Eigen::Index i = begin; i < end; ++i) {
      for (std::size_t p = 0; p < n_params; ++p)
        values[p] = model.sample_param(p, seed, static_cast<std::uint64_t>(i),
                                       &covs[p]);
      Eigen::Index col = 0;
      for (std::size_t p = 0; p < n_params; ++p) r.columns(i, col++) = values[p];
      for (std::size_t p : hier_params) r.columns(i, col++) = covs[p];

      const double N1 = values[0];
      const double N2 = values[1];
      bool excluded = false;

      KneePoint knee;
      if (is_dldr) {
        knee = dldr_knee({values[2], values[3]}, N1, N2);
        r.columns(i, col++) = knee.beta1;
        r.columns(i, col++) = knee.beta2;
        excluded = !knee.inside_unit_square;
      } else if (model.model_kind() == ModelKind::nonlinear) {
        excluded = !(N1 < n_e) || !(N2 < n_e);
      }

      for (double n1 : n1_values) {
        double n2 = kNaN;
        if (!excluded) {
          if (n1 >= N1) {
            // The first level already consumed the full life: nothing left.
            n2 = 0.0;
          } else {
            switch (model.model_kind()) {
              case ModelKind::ldr:
                n2 = ldr_remaining(n1, N1, N2);
                break;
              case ModelKind::dldr:
                n2 = dldr_remaining(n1, N1, N2, knee);
                break;
              case ModelKind::nonlinear:
                n2 = nonlinear_remaining(n1, N1, N2, {n_e, values[2]});
                break;
            }
          }
        }
        r.columns(i, col++) = n2;
      }
      r.excluded[i] = excluded;
    }
  };

  if (threads == 1 || n_samples < 2 * threads) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const Eigen::Index chunk = (n_samples + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const Eigen::Index b = t * chunk;
      const Eigen::Index e = std::min<Eigen::Index>(b + chunk, n_samples);
      if (b >= e) break;
      pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  r.excluded_count = static_cast<Eigen::Index>(r.excluded.count());
  return r;
}

namespace {

void require_dldr(const PropagationResult& r, const char* who) {
  if (r.model_kind != ModelKind::dldr)
    throw std::invalid_argument(std::string(who) +
                                ": needs a dldr propagation result");
}

// Knee coordinates of unexcluded draws.
std::pair<Eigen::ArrayXd, Eigen::ArrayXd> included_knees(
    const PropagationResult& r) {
  const Eigen::Index n = r.n_samples - r.excluded_count;
  Eigen::ArrayXd b1(n), b2(n);
  const auto c1 = r.column("beta1_knee");
  const auto c2 = r.column("beta2_knee");
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < r.n_samples; ++i) {
    if (r.excluded[i]) continue;
    b1[k] = c1[i];
    b2[k] = c2[i];
    ++k;
  }
  return {std::move(b1), std::move(b2)};
}

}  // namespace

Kde2Density knee_joint_density(const PropagationResult& r) {
  require_dldr(r, "knee_joint_density");
  const auto [b1, b2] = included_knees(r);
  if (b1.size() < 1000)
    throw std::invalid_argument(
        "knee_joint_density: need at least 1000 unexcluded draws");
  return kde2_fit(b1, b2);
}

ConditionalKneeProb conditional_knee_prob(const PropagationResult& r,
                                          double beta1_fixed,
                                          std::optional<double> window) {
  require_dldr(r, "conditional_knee_prob");
  if (!(beta1_fixed > 0.0) || !(beta1_fixed < 1.0))
    throw std::invalid_argument(
        "conditional_knee_prob: beta1_fixed must be in (0,1)");
  const auto [b1, b2] = included_knees(r);
  if (b1.size() < 2)
    throw std::invalid_argument("conditional_knee_prob: too few draws");

  ConditionalKneeProb out;
  out.beta1 = beta1_fixed;
  if (window) {
    if (!(*window > 0.0))
      throw std::invalid_argument("conditional_knee_prob: window must be > 0");
    out.window = *window;
  } else {
    // Default window: the beta1-axis bandwidth of the knee KDE, so the
    // counting estimator conditions on the same scale the smoothed
    // cross-check integrates over.
    out.window = kde2_fit(b1, b2).bandwidth_x();
  }

  const double threshold = 1.0 - beta1_fixed;
  Eigen::Index in_window = 0, below = 0;
  for (Eigen::Index i = 0; i < b1.size(); ++i) {
    if (std::abs(b1[i] - beta1_fixed) < out.window) {
      ++in_window;
      if (b2[i] <= threshold) ++below;
    }
  }
  if (in_window == 0)
    throw std::runtime_error(
        "conditional_knee_prob: no draws inside the window around beta1=" +
        fmt_short(beta1_fixed) + "; pass a larger window");
  out.in_window = in_window;
  out.counting =
      static_cast<double>(below) / static_cast<double>(in_window);
  out.counting_se = std::sqrt(
      std::max(0.0, out.counting * (1.0 - out.counting) /
                        static_cast<double>(in_window)));
  out.kde = kde2_fit(b1, b2).conditional_cdf(beta1_fixed, threshold);
  return out;
}

KdeDensity n2_distribution(const PropagationResult& r, double n1,
                           double* flagged_fraction) {
  Eigen::Index which = -1;
  for (std::size_t j = 0; j < r.n1_values.size(); ++j)
    if (r.n1_values[j] == n1 ||
        std::abs(r.n1_values[j] - n1) <= 1e-12 * std::max(1.0, std::abs(n1)))
      which = static_cast<Eigen::Index>(j);
  if (which < 0)
    throw std::invalid_argument("n2_distribution: n1 was not in the run");

  const Eigen::Index col =
      r.columns.cols() - static_cast<Eigen::Index>(r.n1_values.size()) + which;
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(r.n_samples));
  for (Eigen::Index i = 0; i < r.n_samples; ++i) {
    const double v = r.columns(i, col);
    if (!r.excluded[i] && std::isfinite(v)) vals.push_back(v);
  }
  if (flagged_fraction)
    *flagged_fraction =
        1.0 - static_cast<double>(vals.size()) / static_cast<double>(r.n_samples);
  if (vals.size() < 5)
    throw std::invalid_argument("n2_distribution: too few valid draws");
  Eigen::Map<Eigen::ArrayXd> arr(vals.data(),
                                 static_cast<Eigen::Index>(vals.size()));
  return kde_fit(arr, 0.0, {}, {});
}

BandTable n2_band(const InputJointModel& model,
                  const std::vector<double>& n1_grid,
                  const std::vector<double>& levels, Eigen::Index n_samples,
                  std::uint64_t seed, int threads) {
  if (levels.empty())
    throw std::invalid_argument("n2_band: need at least one level");
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    if (!(levels[i] < levels[i + 1]))
      throw std::invalid_argument("n2_band: levels must be sorted increasing");
  for (double p : levels)
    if (!(p > 0.0) || !(p < 1.0))
      throw std::invalid_argument("n2_band: levels must be in (0,1)");

  const PropagationResult r = run(model, n1_grid, n_samples, seed, threads);
  BandTable band;
  band.n1 = n1_grid;
  band.levels = levels;
  band.quantiles.resize(static_cast<Eigen::Index>(n1_grid.size()),
                        static_cast<Eigen::Index>(levels.size()));
  band.valid_fraction.resize(n1_grid.size());

  const Eigen::Index first_col =
      r.columns.cols() - static_cast<Eigen::Index>(n1_grid.size());
  for (std::size_t j = 0; j < n1_grid.size(); ++j) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(r.n_samples));
    for (Eigen::Index i = 0; i < r.n_samples; ++i) {
      const double v = r.columns(i, first_col + static_cast<Eigen::Index>(j));
      if (!r.excluded[i] && std::isfinite(v)) vals.push_back(v);
    }
    if (vals.empty())
      throw std::runtime_error("n2_band: no valid draws at n1 = " +
                               fmt_short(n1_grid[j]));
    std::sort(vals.begin(), vals.end());
    band.valid_fraction[j] =
        static_cast<double>(vals.size()) / static_cast<double>(r.n_samples);
    for (std::size_t l = 0; l < levels.size(); ++l)
      band.quantiles(static_cast<Eigen::Index>(j),
                     static_cast<Eigen::Index>(l)) =
          empirical_quantile(vals, levels[l]);
  }
  return band;
}

std::string result_to_csv(const PropagationResult& r) {
  std::string s;
  s += "# model=" + to_string(r.model_kind) + " seed=" + std::to_string(r.seed) +
       " n_samples=" + std::to_string(r.n_samples) + "\n";
  s += "draw";
  for (const auto& name : r.column_names) s += "," + name;
  s += ",excluded\n";
  for (Eigen::Index i = 0; i < r.n_samples; ++i) {
    s += std::to_string(i);
    for (Eigen::Index c = 0; c < r.columns.cols(); ++c)
      s += "," + fmt17(r.columns(i, c));
    s += r.excluded[i] ? ",1\n" : ",0\n";
  }
  return s;
}

std::string result_summary_json(const PropagationResult& r,
                                const std::vector<double>& beta1_levels,
                                std::optional<double> window) {
  const double excluded_fraction =
      static_cast<double>(r.excluded_count) / static_cast<double>(r.n_samples);
  std::string s = "{\n";
  s += "  \"model\": \"" + to_string(r.model_kind) + "\",\n";
  s += "  \"seed\": " + std::to_string(r.seed) + ",\n";
  s += "  \"n_samples\": " + std::to_string(r.n_samples) + ",\n";
  s += "  \"excluded_count\": " + std::to_string(r.excluded_count) + ",\n";
  s += "  \"excluded_fraction\": " + fmt17(excluded_fraction) + ",\n";
  if (r.small_sample_warning)
    s += "  \"warning\": \"fewer than 1000 samples\",\n";

  s += "  \"n2_quantiles\": {\n";
  static const double qs[] = {0.01, 0.25, 0.50, 0.75, 0.99};
  const Eigen::Index first_col =
      r.columns.cols() - static_cast<Eigen::Index>(r.n1_values.size());
  for (std::size_t j = 0; j < r.n1_values.size(); ++j) {
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < r.n_samples; ++i) {
      const double v = r.columns(i, first_col + static_cast<Eigen::Index>(j));
      if (!r.excluded[i] && std::isfinite(v)) vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    s += "    \"" + fmt_short(r.n1_values[j]) + "\": ";
    if (vals.empty()) {
      s += "null";
    } else {
      s += "[";
      for (std::size_t q = 0; q < 5; ++q) {
        s += fmt17(empirical_quantile(vals, qs[q]));
        if (q + 1 < 5) s += ", ";
      }
      s += "]";
    }
    s += (j + 1 < r.n1_values.size()) ? ",\n" : "\n";
  }
  s += "  }";

  if (r.model_kind == ModelKind::dldr && !beta1_levels.empty()) {
    s += ",\n  \"conditional_knee_prob\": [\n";
    for (std::size_t k = 0; k < beta1_levels.size(); ++k) {
      const auto c = conditional_knee_prob(r, beta1_levels[k], window);
      s += "    {\"beta1\": " + fmt17(c.beta1) + ", \"window\": " +
           fmt17(c.window) + ", \"in_window\": " + std::to_string(c.in_window) +
           ", \"counting\": " + fmt17(c.counting) + ", \"counting_se\": " +
           fmt17(c.counting_se) + ", \"kde\": " + fmt17(c.kde) + "}";
      s += (k + 1 < beta1_levels.size()) ? ",\n" : "\n";
    }
    s += "  ]\n";
  } else {
    s += "\n";
  }
  s += "}\n";
  return s;
}

}  // namespace dldr
