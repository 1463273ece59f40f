// Command-line front end: distribution fitting, convergence diagnostics,
// damage-parameter fitting, Monte Carlo propagation and band tables.
//
// Every subcommand reads one JSON config document, writes machine-readable
// artifacts (CSV/JSON, optionally SVG) into --out, and is idempotent: the
// same config and seed reproduce byte-identical primary artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dldr/data.hpp"
#include "dldr/damage.hpp"
#include "dldr/maxent.hpp"
#include "dldr/nonparam.hpp"
#include "dldr/propagate.hpp"
#include "dldr/rng.hpp"
#include "dldr/svg.hpp"
#include "dldr/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct user_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<long long> samples;
  std::optional<int> threads;
  bool svg = false;
};

json load_config(const Options& opt) {
  if (opt.config_path.empty()) throw user_error("--config is required");
  std::ifstream in(opt.config_path);
  if (!in) throw user_error("cannot open config: " + opt.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw user_error(std::string("config parse error: ") + e.what());
  }
  return j;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw user_error("cannot write " + path.string());
  out << content;
}

double bound_from_json(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "+inf" || s == "inf")
      return std::numeric_limits<double>::infinity();
    throw user_error("bad support bound: " + s);
  }
  return v.get<double>();
}

Eigen::ArrayXd numbers_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw user_error("cannot open data file: " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    vals.push_back(std::stod(line));
  }
  if (vals.empty()) throw user_error("no numbers in " + path);
  return Eigen::Map<Eigen::ArrayXd>(vals.data(),
                                    static_cast<Eigen::Index>(vals.size()));
}

dldr::MomentConstraints constraints_from_json(const json& j) {
  dldr::MomentConstraints c;
  const auto& sup = j.at("support");
  c.support_lo = bound_from_json(sup.at(0));
  c.support_hi = bound_from_json(sup.at(1));
  if (j.contains("mean") && !j["mean"].is_null())
    c.mean = j["mean"].get<double>();
  if (j.contains("std") && !j["std"].is_null())
    c.std_dev = j["std"].get<double>();
  return c;
}

dldr::MarginalSpec marginal_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "point")
    return dldr::MarginalSpec::point(j.at("value").get<double>());
  if (kind == "maxent-fixed")
    return dldr::MarginalSpec::maxent(constraints_from_json(j));
  if (kind == "maxent-hierarchical") {
    const auto& sup = j.at("support");
    const auto& cov = j.at("cov");
    return dldr::MarginalSpec::maxent_hier(
        bound_from_json(sup.at(0)), bound_from_json(sup.at(1)),
        j.at("mean").get<double>(), cov.at(0).get<double>(),
        cov.at(1).get<double>());
  }
  if (kind == "kde-from-data") {
    Eigen::ArrayXd data;
    if (j.contains("data")) {
      const auto& arr = j["data"];
      data.resize(static_cast<Eigen::Index>(arr.size()));
      for (std::size_t i = 0; i < arr.size(); ++i)
        data[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    } else if (j.contains("data_file")) {
      data = numbers_from_file(j["data_file"].get<std::string>());
    } else if (j.contains("single_load_file")) {
      data = dldr::load_single_load_csv(j["single_load_file"].get<std::string>())
                 .lifetimes;
    } else {
      throw user_error("kde-from-data marginal needs data/data_file");
    }
    std::optional<double> lo, hi;
    if (j.contains("support")) {
      const auto& sup = j["support"];
      const double a = bound_from_json(sup.at(0));
      const double b = bound_from_json(sup.at(1));
      if (std::isfinite(a)) lo = a;
      if (std::isfinite(b)) hi = b;
    }
    return dldr::MarginalSpec::kde(std::move(data), lo, hi);
  }
  throw user_error("unknown marginal kind: " + kind);
}

dldr::InputJointModel model_from_config(const json& cfg) {
  const auto kind =
      dldr::model_kind_from_string(cfg.at("model").get<std::string>());
  std::map<std::string, dldr::MarginalSpec> specs;
  for (const auto& [name, mj] : cfg.at("marginals").items())
    specs.emplace(name, marginal_from_json(mj));
  std::map<std::string, double> fixed;
  if (cfg.contains("fixed"))
    for (const auto& [name, v] : cfg["fixed"].items())
      fixed[name] = v.get<double>();
  return dldr::build_input_model(specs, kind, fixed);
}

std::vector<double> doubles_from_json(const json& arr) {
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(v.get<double>());
  return out;
}

std::uint64_t pick_seed(const Options& opt, const json& cfg) {
  if (opt.seed) return *opt.seed;
  if (cfg.contains("seed")) return cfg["seed"].get<std::uint64_t>();
  return dldr::kDefaultSeed;
}

Eigen::Index pick_samples(const Options& opt, const json& cfg,
                          Eigen::Index fallback = 10000) {
  if (opt.samples) return static_cast<Eigen::Index>(*opt.samples);
  if (cfg.contains("samples")) return cfg["samples"].get<Eigen::Index>();
  return fallback;
}

int pick_threads(const Options& opt, const json& cfg) {
  if (opt.threads) return *opt.threads;
  if (cfg.contains("threads")) return cfg["threads"].get<int>();
  return 1;
}

// --- subcommands ---------------------------------------------------------

void cmd_fit_maxent(const Options& opt) {
  const json cfg = load_config(opt);
  const auto c = constraints_from_json(cfg);
  const auto d = dldr::fit_maxent(c);
  write_file(fs::path(opt.out_dir) / "maxent.json", dldr::to_json(d));

  std::string csv = "x,pdf\n";
  const auto& xs = d.grid_x();
  const Eigen::Index n = 1000;
  std::vector<double> px, py;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x =
        xs[0] + (xs[xs.size() - 1] - xs[0]) * static_cast<double>(i) /
                    static_cast<double>(n - 1);
    csv += dldr::fmt17(x) + "," + dldr::fmt17(d.pdf(x)) + "\n";
    px.push_back(x);
    py.push_back(d.pdf(x));
  }
  write_file(fs::path(opt.out_dir) / "maxent_pdf.csv", csv);
  if (opt.svg) {
    dldr::SvgPlot plot("maximum-entropy density", "x", "pdf");
    plot.add_line(px, py, "#1f77b4");
    write_file(fs::path(opt.out_dir) / "maxent_pdf.svg", plot.render());
  }
}

void cmd_converge(const Options& opt) {
  const json cfg = load_config(opt);
  Eigen::ArrayXd samples;
  if (cfg.contains("input"))
    samples = dldr::load_single_load_csv(cfg["input"].get<std::string>())
                  .lifetimes;
  else if (cfg.contains("data_file"))
    samples = numbers_from_file(cfg["data_file"].get<std::string>());
  else if (cfg.contains("data"))
    samples = Eigen::Map<const Eigen::ArrayXd>(
        doubles_from_json(cfg["data"]).data(),
        static_cast<Eigen::Index>(cfg["data"].size()));
  else
    throw user_error("converge: config needs input/data_file/data");

  const int shuffles = cfg.value("shuffles", 3);
  const double tail = cfg.value("tail_fraction", 0.2);
  const double threshold = cfg.value("threshold", 0.05);
  const auto rep = dldr::convergence_diagnostic(samples, shuffles, tail,
                                                threshold, pick_seed(opt, cfg));
  write_file(fs::path(opt.out_dir) / "converge.json", rep.to_json());

  if (opt.svg) {
    dldr::SvgPlot plot("running standard deviation", "samples",
                       "running std");
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    for (std::size_t t = 0; t < rep.trajectories.size(); ++t) {
      std::vector<double> xs, ys;
      for (Eigen::Index i = 1; i < rep.trajectories[t].size(); ++i) {
        xs.push_back(static_cast<double>(i + 1));
        ys.push_back(rep.trajectories[t][i]);
      }
      plot.add_line(xs, ys, colors[t % 4], "shuffle " + std::to_string(t + 1));
    }
    write_file(fs::path(opt.out_dir) / "converge.svg", plot.render());
  }
}

void cmd_fit_params(const Options& opt) {
  const json cfg = load_config(opt);
  const std::string mode = cfg.value("mode", "dldr");
  const auto two =
      dldr::load_two_load_csv(cfg.at("two_load").get<std::string>());

  auto mean_of = [&](const char* direct, const char* file) {
    if (cfg.contains(direct)) return cfg[direct].get<double>();
    if (cfg.contains(file))
      return dldr::summary_stats(
                 dldr::load_single_load_csv(cfg[file].get<std::string>())
                     .lifetimes)
          .mean;
    throw user_error(std::string("fit-params: need ") + direct + " or " + file);
  };
  const double n1_mean = mean_of("N1_mean", "single_high_file");
  const double n2_mean = mean_of("N2_mean", "single_low_file");

  json out;
  if (mode == "dldr") {
    std::vector<std::pair<double, double>> points;
    for (const auto& g : two.groups)
      points.emplace_back(g.n1 / n1_mean, g.observations.mean() / n2_mean);
    dldr::Interval alpha_support{-1.0, 1.0}, b_support{0.0, 1.0};
    if (cfg.contains("alpha_support")) {
      alpha_support.lo = cfg["alpha_support"].at(0).get<double>();
      alpha_support.hi = cfg["alpha_support"].at(1).get<double>();
    }
    if (cfg.contains("b_support")) {
      b_support.lo = cfg["b_support"].at(0).get<double>();
      b_support.hi = cfg["b_support"].at(1).get<double>();
    }
    const auto fit =
        dldr::fit_dldr(points, n1_mean / n2_mean, alpha_support, b_support);
    out["alpha"] = fit.params.alpha;
    out["b"] = fit.params.b;
    out["sse"] = fit.sse;
    if (fit.b_unidentifiable)
      out["warning"] = "objective is flat along B (alpha ~ 0); reported B is "
                       "the midpoint of its search interval";
  } else if (mode == "qratio") {
    const double n_e = cfg.at("n_e").get<double>();
    std::vector<std::pair<double, double>> points;
    for (const auto& g : two.groups)
      points.emplace_back(g.n1, g.observations.mean());
    out["q_ratio"] = dldr::fit_qratio(points, n1_mean, n2_mean, n_e);
    out["n_e"] = n_e;
  } else {
    throw user_error("fit-params: mode must be dldr or qratio");
  }
  write_file(fs::path(opt.out_dir) / "fit_params.json", out.dump(2) + "\n");
}

dldr::PropagationResult run_from_config(const Options& opt, const json& cfg) {
  const auto model = model_from_config(cfg);
  std::vector<double> n1_values;
  if (cfg.contains("n1")) n1_values = doubles_from_json(cfg["n1"]);
  if (n1_values.empty())
    throw user_error("config needs a nonempty n1 array");
  return dldr::run(model, n1_values, pick_samples(opt, cfg),
                   pick_seed(opt, cfg), pick_threads(opt, cfg));
}

void cmd_propagate(const Options& opt) {
  const json cfg = load_config(opt);
  const auto r = run_from_config(opt, cfg);
  if (r.small_sample_warning)
    std::cerr << "{\"warning\": \"fewer than 1000 samples\"}\n";

  write_file(fs::path(opt.out_dir) / "propagate.csv", dldr::result_to_csv(r));
  std::vector<double> beta1 = {0.25, 0.50, 0.75};
  if (cfg.contains("beta1")) beta1 = doubles_from_json(cfg["beta1"]);
  std::optional<double> window;
  if (cfg.contains("window")) window = cfg["window"].get<double>();
  if (r.model_kind != dldr::ModelKind::dldr) beta1.clear();
  write_file(fs::path(opt.out_dir) / "propagate_summary.json",
             dldr::result_summary_json(r, beta1, window));

  for (double n1 : r.n1_values) {
    double flagged = 0.0;
    try {
      const auto dens = dldr::n2_distribution(r, n1, &flagged);
      Eigen::ArrayXd xs, ps;
      dens.grid(400, xs, ps);
      std::string csv = "x,pdf\n";
      for (Eigen::Index i = 0; i < xs.size(); ++i)
        csv += dldr::fmt17(xs[i]) + "," + dldr::fmt17(ps[i]) + "\n";
      write_file(fs::path(opt.out_dir) /
                     ("n2_density_" + dldr::fmt_short(n1) + ".csv"),
                 csv);
      if (opt.svg) {
        dldr::SvgPlot plot("remaining-life density, n1 = " + dldr::fmt_short(n1),
                           "n2 (cycles)", "pdf");
        plot.add_line(std::vector<double>(xs.data(), xs.data() + xs.size()),
                      std::vector<double>(ps.data(), ps.data() + ps.size()),
                      "#1f77b4");
        write_file(fs::path(opt.out_dir) /
                       ("n2_density_" + dldr::fmt_short(n1) + ".svg"),
                   plot.render());
      }
    } catch (const std::invalid_argument&) {
      // degenerate column (point-mass inputs); no density artifacts
    }
  }
}

void cmd_knee_prob(const Options& opt) {
  const json cfg = load_config(opt);
  const auto r = run_from_config(opt, cfg);
  if (r.model_kind != dldr::ModelKind::dldr)
    throw user_error("knee-prob: model must be dldr");
  std::vector<double> beta1 = {0.25, 0.50, 0.75};
  if (cfg.contains("beta1")) beta1 = doubles_from_json(cfg["beta1"]);
  std::optional<double> window;
  if (cfg.contains("window")) window = cfg["window"].get<double>();

  std::string s = "{\n  \"excluded_fraction\": " +
                  dldr::fmt17(static_cast<double>(r.excluded_count) /
                              static_cast<double>(r.n_samples)) +
                  ",\n  \"probabilities\": [\n";
  for (std::size_t i = 0; i < beta1.size(); ++i) {
    const auto c = dldr::conditional_knee_prob(r, beta1[i], window);
    s += "    {\"beta1\": " + dldr::fmt17(c.beta1) +
         ", \"window\": " + dldr::fmt17(c.window) +
         ", \"in_window\": " + std::to_string(c.in_window) +
         ", \"counting\": " + dldr::fmt17(c.counting) +
         ", \"counting_se\": " + dldr::fmt17(c.counting_se) +
         ", \"kde\": " + dldr::fmt17(c.kde) + "}";
    s += (i + 1 < beta1.size()) ? ",\n" : "\n";
  }
  s += "  ]\n}\n";
  write_file(fs::path(opt.out_dir) / "knee_prob.json", s);

  try {
    const auto dens = dldr::knee_joint_density(r);
    Eigen::ArrayXd gx, gy;
    Eigen::MatrixXd pdf;
    dens.grid(128, 128, gx, gy, pdf);
    std::string csv = "beta1_knee,beta2_knee,pdf\n";
    for (Eigen::Index i = 0; i < gx.size(); ++i)
      for (Eigen::Index j = 0; j < gy.size(); ++j)
        csv += dldr::fmt17(gx[i]) + "," + dldr::fmt17(gy[j]) + "," +
               dldr::fmt17(pdf(i, j)) + "\n";
    write_file(fs::path(opt.out_dir) / "knee_density.csv", csv);
  } catch (const std::invalid_argument&) {
    // not enough unexcluded draws or degenerate inputs; no density grid
  }
}

void cmd_band(const Options& opt) {
  const json cfg = load_config(opt);
  const auto model = model_from_config(cfg);

  std::vector<double> grid;
  if (cfg.contains("n1_grid")) {
    const auto& g = cfg["n1_grid"];
    if (g.is_array()) {
      grid = doubles_from_json(g);
    } else {
      const double from = g.at("from").get<double>();
      const double to = g.at("to").get<double>();
      const int points = g.at("points").get<int>();
      if (points < 2 || !(to > from))
        throw user_error("band: bad n1_grid range");
      for (int i = 0; i < points; ++i)
        grid.push_back(from + (to - from) * i / (points - 1));
    }
  } else {
    throw user_error("band: config needs n1_grid");
  }
  std::vector<double> levels = {0.01, 0.50, 0.99};
  if (cfg.contains("levels")) levels = doubles_from_json(cfg["levels"]);

  const auto band = dldr::n2_band(model, grid, levels, pick_samples(opt, cfg),
                                  pick_seed(opt, cfg), pick_threads(opt, cfg));

  std::string csv = "n1";
  for (double p : band.levels) csv += ",q" + dldr::fmt_short(p);
  csv += ",valid_fraction\n";
  for (std::size_t i = 0; i < band.n1.size(); ++i) {
    csv += dldr::fmt17(band.n1[i]);
    for (std::size_t l = 0; l < band.levels.size(); ++l)
      csv += "," + dldr::fmt17(band.quantiles(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(l)));
    csv += "," + dldr::fmt17(band.valid_fraction[i]) + "\n";
  }
  write_file(fs::path(opt.out_dir) / "band.csv", csv);

  if (opt.svg) {
    dldr::SvgPlot plot("remaining-life band", "n1 (cycles)", "n2 (cycles)");
    const char* colors[] = {"#d62728", "#1f77b4", "#d62728"};
    for (std::size_t l = 0; l < band.levels.size(); ++l) {
      std::vector<double> ys;
      for (std::size_t i = 0; i < band.n1.size(); ++i)
        ys.push_back(band.quantiles(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(l)));
      plot.add_line(band.n1, ys, colors[l % 3],
                    "q=" + dldr::fmt_short(band.levels[l]));
    }
    if (cfg.contains("two_load")) {
      const auto two =
          dldr::load_two_load_csv(cfg["two_load"].get<std::string>());
      std::vector<double> xs, ys;
      for (const auto& g : two.groups)
        for (Eigen::Index i = 0; i < g.observations.size(); ++i) {
          xs.push_back(g.n1);
          ys.push_back(g.observations[i]);
        }
      plot.add_points(xs, ys, "#2ca02c", "experiments");
    }
    write_file(fs::path(opt.out_dir) / "band.svg", plot.render());
  }
}

void cmd_datasets(const Options& opt) {
  std::string s = "{\n";
  const auto ids = dldr::builtin_dataset_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::string body = dldr::constraints_to_json(dldr::builtin_constraints(ids[i]));
    while (!body.empty() && (body.back() == '\n')) body.pop_back();
    s += "  \"" + ids[i] + "\": " + body;
    s += (i + 1 < ids.size()) ? ",\n" : "\n";
  }
  s += "}\n";
  write_file(fs::path(opt.out_dir) / "datasets.json", s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic fatigue damage toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  Options opt;
  app.add_option("--config", opt.config_path, "JSON config document");
  app.add_option("--seed", opt.seed,
                 "random seed (overrides config; default 424242)");
  app.add_option("--samples", opt.samples,
                 "Monte Carlo draws (overrides config; default 10000)");
  app.add_option("--out", opt.out_dir, "output directory (default .)");
  app.add_option("--threads", opt.threads,
                 "worker threads, never changes results (default 1)");
  app.add_flag("--svg", opt.svg, "also emit SVG plots");

  auto* fit_maxent = app.add_subcommand(
      "fit-maxent", "fit a maximum-entropy density from moment constraints");
  auto* converge = app.add_subcommand(
      "converge", "running-std convergence diagnostic for a dataset");
  auto* fit_params = app.add_subcommand(
      "fit-params", "fit damage-model parameters from two-load data");
  auto* propagate = app.add_subcommand(
      "propagate", "Monte Carlo propagation through a damage model");
  auto* knee_prob = app.add_subcommand(
      "knee-prob", "conditional knee-position probabilities");
  auto* band = app.add_subcommand(
      "band", "remaining-life quantile band over an n1 grid");
  auto* datasets = app.add_subcommand(
      "datasets", "emit the built-in dataset constraint tables");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_maxent->parsed()) cmd_fit_maxent(opt);
    if (converge->parsed()) cmd_converge(opt);
    if (fit_params->parsed()) cmd_fit_params(opt);
    if (propagate->parsed()) cmd_propagate(opt);
    if (knee_prob->parsed()) cmd_knee_prob(opt);
    if (band->parsed()) cmd_band(opt);
    if (datasets->parsed()) cmd_datasets(opt);
  } catch (const user_error& e) {
    std::cerr << "{\"error\": " << json(e.what()).dump() << ", \"exit\": 2}\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "{\"error\": " << json(e.what()).dump() << ", \"exit\": 2}\n";
    return 2;
  } catch (const dldr::infeasible_error& e) {
    std::cerr << "{\"error\": " << json(e.what()).dump() << ", \"exit\": 2}\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "{\"error\": " << json(e.what()).dump() << ", \"exit\": 2}\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": " << json(e.what()).dump() << ", \"exit\": 1}\n";
    return 1;
  }
  return 0;
}
