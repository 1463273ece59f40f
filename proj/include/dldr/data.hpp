#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace dldr {

// Lifetime samples from repeated tests at one stress level.
struct SingleLoadDataset {
  std::string material;
  double stress_mpa = 0.0;
  Eigen::ArrayXd lifetimes;  // cycles, all positive
};

// Two-level high-low experiment: groups share a first-level cycle count n1
// and hold the observed remaining lives n2.
struct TwoLoadDataset {
  std::string material;
  double stress_high_mpa = 0.0;
  double stress_low_mpa = 0.0;
  struct Group {
    double n1 = 0.0;
    Eigen::ArrayXd observations;  // n2 values
  };
  std::vector<Group> groups;  // n1 strictly increasing
};

// Transcribed modeling inputs for the three literature datasets the toolkit
// ships constraints for.
struct ParamConstraint {
  double support_lo = 0.0;
  double support_hi = 1.0;
  double mean = 0.0;
  double cov_lo = 0.05;
  double cov_hi = 0.10;
};

struct QRatioConstraint {
  double mean = 1.0;
  double support_lo = 0.0;
  double support_hi = 1.0;
  double cov_lo = 0.05;
  double cov_hi = 0.10;
};

struct DatasetConstraints {
  std::string id;
  std::string material;
  ParamConstraint alpha;
  ParamConstraint b;
  QRatioConstraint q_ratio;
  std::vector<double> n1_schedule;       // first-level cycle counts tested
  std::array<int, 3> sample_sizes{};     // single-load high, single-load low,
                                         // two-load specimen counts
  std::string notes;
};

// CSV schemas (UTF-8, comma separated, '#' comment lines):
//   single-load: metadata rows "material,<text>" and "stress_mpa,<value>",
//                then one positive lifetime per line.
//   two-load:    metadata rows "material", "stress_high_mpa",
//                "stress_low_mpa", a "n1,n2" header, then one observation
//                per row; rows are grouped by equal n1 and may arrive in
//                any order.
SingleLoadDataset load_single_load_csv(const std::string& path);
TwoLoadDataset load_two_load_csv(const std::string& path);

std::string to_csv(const SingleLoadDataset& d);
std::string to_csv(const TwoLoadDataset& d);

// Built-in constraint tables; `id` is one of "tanaka", "xie045", "xie16mn".
const DatasetConstraints& builtin_constraints(const std::string& id);
std::vector<std::string> builtin_dataset_ids();
std::string constraints_to_json(const DatasetConstraints& c);

}  // namespace dldr
