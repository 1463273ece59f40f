#include "dldr/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dldr/textio.hpp"

namespace dldr {

namespace {

[[noreturn]] void fail(const std::string& path, int line,
                       const std::string& what) {
  throw std::invalid_argument(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::pair<int, std::string>> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::vector<std::pair<int, std::string>> lines;
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string trimmed = raw;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    lines.emplace_back(no, trimmed);
  }
  return lines;
}

double parse_number(const std::string& path, int line, const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) fail(path, line, "trailing junk in number: " + tok);
    return v;
  } catch (const std::invalid_argument&) {
    fail(path, line, "not a number: " + tok);
  } catch (const std::out_of_range&) {
    fail(path, line, "number out of range: " + tok);
  }
}

std::pair<std::string, std::string> split2(const std::string& s) {
  const auto pos = s.find(',');
  if (pos == std::string::npos) return {s, ""};
  return {s.substr(0, pos), s.substr(pos + 1)};
}

}  // namespace

SingleLoadDataset load_single_load_csv(const std::string& path) {
  const auto lines = read_lines(path);
  SingleLoadDataset d;
  bool have_material = false, have_stress = false;
  std::vector<double> lifetimes;
  for (const auto& [no, text] : lines) {
    const auto [key, value] = split2(text);
    if (key == "material") {
      d.material = value;
      have_material = true;
    } else if (key == "stress_mpa") {
      d.stress_mpa = parse_number(path, no, value);
      if (!(d.stress_mpa > 0.0)) fail(path, no, "stress must be positive");
      have_stress = true;
    } else {
      if (!value.empty()) fail(path, no, "expected a single lifetime value");
      const double v = parse_number(path, no, key);
      if (!(v > 0.0)) fail(path, no, "lifetime must be positive");
      lifetimes.push_back(v);
    }
  }
  if (!have_material || !have_stress)
    throw std::invalid_argument(path +
                                ": missing material/stress_mpa metadata rows");
  if (lifetimes.empty())
    throw std::invalid_argument(path + ": no lifetime rows");
  d.lifetimes = Eigen::Map<Eigen::ArrayXd>(lifetimes.data(),
                                           static_cast<Eigen::Index>(
                                               lifetimes.size()));
  return d;
}

TwoLoadDataset load_two_load_csv(const std::string& path) {
  const auto lines = read_lines(path);
  TwoLoadDataset d;
  bool have_material = false, have_high = false, have_low = false;
  bool seen_header = false;
  std::map<double, std::vector<double>> groups;
  for (const auto& [no, text] : lines) {
    const auto [key, value] = split2(text);
    if (key == "material") {
      d.material = value;
      have_material = true;
    } else if (key == "stress_high_mpa") {
      d.stress_high_mpa = parse_number(path, no, value);
      have_high = true;
    } else if (key == "stress_low_mpa") {
      d.stress_low_mpa = parse_number(path, no, value);
      have_low = true;
    } else if (key == "n1" && value == "n2") {
      seen_header = true;
    } else {
      if (!seen_header) fail(path, no, "data row before the n1,n2 header");
      if (value.empty()) fail(path, no, "expected two columns n1,n2");
      const double n1 = parse_number(path, no, key);
      const double n2 = parse_number(path, no, value);
      if (!(n1 > 0.0)) fail(path, no, "n1 must be positive");
      if (!(n2 > 0.0)) fail(path, no, "n2 must be positive");
      groups[n1].push_back(n2);
    }
  }
  if (!have_material || !have_high || !have_low)
    throw std::invalid_argument(
        path + ": missing material/stress_high_mpa/stress_low_mpa metadata");
  if (groups.empty()) throw std::invalid_argument(path + ": no data rows");
  if (!(d.stress_high_mpa > d.stress_low_mpa))
    throw std::invalid_argument(
        path + ": stress_high_mpa must exceed stress_low_mpa (H-L sequence)");
  for (auto& [n1, obs] : groups) {
    TwoLoadDataset::Group g;
    g.n1 = n1;
    g.observations = Eigen::Map<Eigen::ArrayXd>(
        obs.data(), static_cast<Eigen::Index>(obs.size()));
    d.groups.push_back(std::move(g));
  }
  return d;
}

std::string to_csv(const SingleLoadDataset& d) {
  std::string s;
  s += "material," + d.material + "\n";
  s += "stress_mpa," + fmt17(d.stress_mpa) + "\n";
  for (Eigen::Index i = 0; i < d.lifetimes.size(); ++i)
    s += fmt17(d.lifetimes[i]) + "\n";
  return s;
}

std::string to_csv(const TwoLoadDataset& d) {
  std::string s;
  s += "material," + d.material + "\n";
  s += "stress_high_mpa," + fmt17(d.stress_high_mpa) + "\n";
  s += "stress_low_mpa," + fmt17(d.stress_low_mpa) + "\n";
  s += "n1,n2\n";
  for (const auto& g : d.groups)
    for (Eigen::Index i = 0; i < g.observations.size(); ++i)
      s += fmt17(g.n1) + "," + fmt17(g.observations[i]) + "\n";
  return s;
}

namespace {

std::map<std::string, DatasetConstraints> make_builtin() {
  std::map<std::string, DatasetConstraints> m;
  {
    DatasetConstraints c;
    c.id = "tanaka";
    c.material = "Ni-Ag alloy";
    c.alpha = {-1.0, 1.0, -0.03, 0.05, 0.10};
    c.b = {0.0, 1.0, 0.80, 0.05, 0.10};
    c.q_ratio = {2.00, 1.60, 2.60, 0.05, 0.10};
    c.n1_schedule = {13300, 26500, 39800, 55400};
    c.sample_sizes = {200, 200, 200};
    c.notes = "four two-load groups of 50 specimens each";
    m[c.id] = c;
  }
  {
    DatasetConstraints c;
    c.id = "xie045";
    c.material = "0.45% carbon steel";
    c.alpha = {0.0, 1.0, 0.34, 0.05, 0.10};
    c.b = {0.0, 1.0, 0.45, 0.05, 0.10};
    c.q_ratio = {0.63, 0.51, 0.76, 0.05, 0.10};
    c.n1_schedule = {40300, 80600, 120900};
    c.sample_sizes = {18, 16, 38};
    c.notes = "two-load groups of 13, 13 and 12 specimens";
    m[c.id] = c;
  }
  {
    DatasetConstraints c;
    c.id = "xie16mn";
    c.material = "16Mn steel alloy";
    c.alpha = {0.0, 1.0, 0.50, 0.05, 0.10};
    c.b = {0.0, 1.0, 0.50, 0.05, 0.10};
    c.q_ratio = {1.74, 1.50, 1.98, 0.05, 0.10};
    c.n1_schedule = {26000, 44000, 75000};
    c.sample_sizes = {15, 15, 30};
    // Totals agree: three batches of 10 sum to the 30 two-load specimens.
    c.notes = "three two-load batches of 10 specimens each";
    m[c.id] = c;
  }
  return m;
}

const std::map<std::string, DatasetConstraints>& builtin_map() {
  static const auto m = make_builtin();
  return m;
}

}  // namespace

const DatasetConstraints& builtin_constraints(const std::string& id) {
  const auto& m = builtin_map();
  const auto it = m.find(id);
  if (it == m.end())
    throw std::invalid_argument("unknown dataset id: " + id +
                                " (expected tanaka, xie045 or xie16mn)");
  return it->second;
}

std::vector<std::string> builtin_dataset_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, c] : builtin_map()) ids.push_back(id);
  return ids;
}

std::string constraints_to_json(const DatasetConstraints& c) {
  auto param = [](const ParamConstraint& p) {
    std::string s = "{";
    s += "\"support\": [" + fmt17(p.support_lo) + ", " + fmt17(p.support_hi) +
         "], ";
    s += "\"mean\": " + fmt17(p.mean) + ", ";
    s += "\"cov\": [" + fmt17(p.cov_lo) + ", " + fmt17(p.cov_hi) + "]}";
    return s;
  };
  std::string s = "{\n";
  s += "  \"id\": \"" + c.id + "\",\n";
  s += "  \"material\": \"" + c.material + "\",\n";
  s += "  \"alpha\": " + param(c.alpha) + ",\n";
  s += "  \"b\": " + param(c.b) + ",\n";
  s += "  \"q_ratio\": {\"mean\": " + fmt17(c.q_ratio.mean) +
       ", \"support\": [" + fmt17(c.q_ratio.support_lo) + ", " +
       fmt17(c.q_ratio.support_hi) + "], \"cov\": [" + fmt17(c.q_ratio.cov_lo) +
       ", " + fmt17(c.q_ratio.cov_hi) + "]},\n";
  s += "  \"n1_schedule\": [";
  for (std::size_t i = 0; i < c.n1_schedule.size(); ++i) {
    s += fmt17(c.n1_schedule[i]);
    if (i + 1 < c.n1_schedule.size()) s += ", ";
  }
  s += "],\n";
  s += "  \"sample_sizes\": [" + std::to_string(c.sample_sizes[0]) + ", " +
       std::to_string(c.sample_sizes[1]) + ", " +
       std::to_string(c.sample_sizes[2]) + "],\n";
  s += "  \"notes\": \"" + c.notes + "\"\n";
  s += "}\n";
  return s;
}

}  // namespace dldr
