#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "dldr/data.hpp"

using namespace dldr;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("single-load csv round trip") {
  const auto p = write_temp("sl_ok.csv",
                            "# synthetic example\n"
                            "material,steel-A\n"
                            "stress_mpa,331\n"
                            "120000\n150000\n90000\n");
  const auto d = load_single_load_csv(p.string());
  CHECK(d.material == "steel-A");
  CHECK(d.stress_mpa == 331.0);
  REQUIRE(d.lifetimes.size() == 3);
  CHECK(d.lifetimes[1] == 150000.0);

  const auto p2 = write_temp("sl_rt.csv", to_csv(d));
  const auto d2 = load_single_load_csv(p2.string());
  CHECK(d2.material == d.material);
  CHECK(d2.stress_mpa == d.stress_mpa);
  CHECK((d2.lifetimes == d.lifetimes).all());
}

TEST_CASE("single-load csv error reporting") {
  const auto neg = write_temp("sl_neg.csv",
                              "material,m\nstress_mpa,300\n100\n-5\n");
  try {
    load_single_load_csv(neg.string());
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find(":4:") != std::string::npos);
  }

  const auto empty = write_temp("sl_empty.csv", "material,m\nstress_mpa,300\n");
  CHECK_THROWS_AS(load_single_load_csv(empty.string()), std::invalid_argument);
  const auto junk = write_temp("sl_junk.csv",
                               "material,m\nstress_mpa,300\nabc\n");
  CHECK_THROWS_AS(load_single_load_csv(junk.string()), std::invalid_argument);
  CHECK_THROWS_AS(load_single_load_csv("/nonexistent/x.csv"),
                  std::invalid_argument);
}

TEST_CASE("two-load csv grouping") {
  const auto p = write_temp("tl_ok.csv",
                            "material,m\n"
                            "stress_high_mpa,666\n"
                            "stress_low_mpa,478\n"
                            "n1,n2\n"
                            "200,700\n"
                            "100,900\n"
                            "100,850\n");
  const auto d = load_two_load_csv(p.string());
  REQUIRE(d.groups.size() == 2);
  CHECK(d.groups[0].n1 == 100.0);  // regrouped ascending
  CHECK(d.groups[0].observations.size() == 2);
  CHECK(d.groups[1].n1 == 200.0);
  CHECK(d.groups[1].observations.size() == 1);

  const auto p2 = write_temp("tl_rt.csv", to_csv(d));
  const auto d2 = load_two_load_csv(p2.string());
  REQUIRE(d2.groups.size() == 2);
  CHECK((d2.groups[0].observations == d.groups[0].observations).all());
}

TEST_CASE("two-load csv error reporting") {
  const auto bad = write_temp("tl_bad.csv",
                              "material,m\nstress_high_mpa,666\n"
                              "stress_low_mpa,478\nn1,n2\n100,-900\n");
  try {
    load_two_load_csv(bad.string());
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find(":5:") != std::string::npos);
  }
  const auto lh = write_temp("tl_lh.csv",
                             "material,m\nstress_high_mpa,300\n"
                             "stress_low_mpa,478\nn1,n2\n100,900\n");
  CHECK_THROWS_AS(load_two_load_csv(lh.string()), std::invalid_argument);
}

TEST_CASE("built-in constraint tables match the transcription") {
  const auto& t = builtin_constraints("tanaka");
  CHECK(t.alpha.support_lo == -1.0);
  CHECK(t.alpha.support_hi == 1.0);
  CHECK(t.alpha.mean == -0.03);
  CHECK(t.alpha.cov_lo == 0.05);
  CHECK(t.alpha.cov_hi == 0.10);
  CHECK(t.b.support_lo == 0.0);
  CHECK(t.b.support_hi == 1.0);
  CHECK(t.b.mean == 0.80);
  CHECK(t.q_ratio.mean == 2.00);
  CHECK(t.q_ratio.support_lo == 1.60);
  CHECK(t.q_ratio.support_hi == 2.60);
  CHECK(t.n1_schedule == std::vector<double>{13300, 26500, 39800, 55400});
  CHECK(t.sample_sizes == std::array<int, 3>{200, 200, 200});

  const auto& x45 = builtin_constraints("xie045");
  CHECK(x45.alpha.support_lo == 0.0);
  CHECK(x45.alpha.mean == 0.34);
  CHECK(x45.b.mean == 0.45);
  CHECK(x45.q_ratio.mean == 0.63);
  CHECK(x45.q_ratio.support_lo == 0.51);
  CHECK(x45.q_ratio.support_hi == 0.76);
  CHECK(x45.n1_schedule == std::vector<double>{40300, 80600, 120900});
  CHECK(x45.sample_sizes == std::array<int, 3>{18, 16, 38});

  const auto& x16 = builtin_constraints("xie16mn");
  CHECK(x16.alpha.mean == 0.50);
  CHECK(x16.b.mean == 0.50);
  CHECK(x16.q_ratio.mean == 1.74);
  CHECK(x16.q_ratio.support_lo == 1.50);
  CHECK(x16.q_ratio.support_hi == 1.98);
  CHECK(x16.n1_schedule == std::vector<double>{26000, 44000, 75000});
  CHECK(x16.sample_sizes == std::array<int, 3>{15, 15, 30});
  CHECK(x16.notes.find("10") != std::string::npos);

  CHECK(builtin_dataset_ids().size() == 3);
  CHECK_THROWS_AS(builtin_constraints("nope"), std::invalid_argument);

  const auto text = constraints_to_json(t);
  const auto parsed = nlohmann::json::parse(text);
  CHECK(parsed.at("alpha").at("mean").get<double>() == -0.03);
  CHECK(parsed.at("n1_schedule").at(0).get<double>() == 13300.0);
  CHECK(parsed.at("q_ratio").at("support").at(1).get<double>() == 2.60);
}
