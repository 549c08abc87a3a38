#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "selgap/csv.hpp"
#include "selgap/harness.hpp"

using namespace selgap;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.name = "tiny";
  c.n_samples = 300;
  c.seeds = {0, 1};
  c.noise_levels = {0.2};
  c.train.epochs = 5;
  c.mc_samples = 100;
  c.moons.n_grid = 32;
  c.models = {{"logistic", ModelSpec::logistic(2, 2)}, {"mlp", ModelSpec::mlp(2, {8}, 2)}};
  c.ensemble_size = 2;
  c.swap_subsample = 20;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("selgap_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config JSON round trip and hash") {
  const auto c = tiny();
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  auto other = c;
  other.delta = 0.1;
  CHECK(other.hash() != c.hash());
  other = c;
  other.output_dir = "elsewhere";
  CHECK(other.hash() == c.hash());
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS(ExperimentConfig::from_json("{\"sedes\": [1]}"));
  CHECK_THROWS(ExperimentConfig::from_json("{\"seeds\": []}"));
  CHECK_THROWS(ExperimentConfig::from_json("{\"coverage_grid\": [0.0, 0.5]}"));
  CHECK_THROWS(ExperimentConfig::from_json("{\"noise_levels\": [0.0]}"));
  CHECK_THROWS(ExperimentConfig::from_json("not json"));
  const auto c = ExperimentConfig::from_json(
      "{\"task\": \"gaussian\", \"shifts\": [\"shear\", {\"kind\": \"rotation\", \"radians\": 0.5}],"
      " \"models\": [{\"kind\": \"logistic\"}]}");
  CHECK(c.task == TaskKind::gaussian);
  CHECK(c.shifts.size() == 2);
  CHECK(c.models.front().spec.kind == ModelKind::logistic);
  CHECK(c.coverage_grid.size() == 20);
}

TEST_CASE("split is a disjoint cover") {
  const auto s = make_split(100, 0.6, 0.2, 5);
  CHECK(s.train.size() == 60);
  CHECK(s.val.size() == 20);
  CHECK(s.test.size() == 20);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 100);
  CHECK(make_split(100, 0.6, 0.2, 5).train == s.train);
  CHECK_THROWS(make_split(100, 0.8, 0.2, 5));
}

TEST_CASE("noise sweep writes traceable rows") {
  auto c = tiny();
  const auto report = cmd_sweep_noise(c);
  CHECK(report.rows.size() == 2);
  for (const auto& r : report.rows) {
    CHECK(r.config_hash == c.hash());
    CHECK(r.config_key == "sigma=0.2");
  }
  CHECK(report.assertions.size() == 1);
  const auto dir = scratch("noise");
  write_run(report, dir);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "assertions.csv"));
  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "curves" / "gap__sigma=0.2__seed0.csv"));
  CHECK(fs::exists(dir / "splits" / "split__seed1.csv"));
  CHECK(read_file(dir / "report.csv").rfind(metric_csv_header(), 0) == 0);
}

TEST_CASE("noise sweep needs the moons task") {
  auto c = tiny();
  c.task = TaskKind::gaussian;
  CHECK_THROWS(cmd_sweep_noise(c));
}

TEST_CASE("capacity sweep compares the smallest and largest model") {
  const auto report = cmd_sweep_capacity(tiny());
  CHECK(report.rows_for("logistic").size() == 2);
  CHECK(report.rows_for("mlp").size() == 2);
  REQUIRE(report.assertions.size() == 1);
  CHECK(report.assertions[0].name == "mlp e_aurc below logistic");
  auto one = tiny();
  one.models.resize(1);
  CHECK(cmd_sweep_capacity(one).assertions.empty());
}

TEST_CASE("calibration study rows and swap bound") {
  const auto report = cmd_calibration_study(tiny());
  for (const auto* key : {"MSP", "TEMP", "ISO", "HIST", "DE"}) CHECK(report.rows_for(key).size() == 2);
  const auto msp = report.rows_for("MSP");
  const auto temp = report.rows_for("TEMP");
  for (std::size_t i = 0; i < msp.size(); ++i) {
    // Two classes: tempering never reorders, so the curves coincide.
    CHECK(temp[i].e_aurc == msp[i].e_aurc);
    CHECK(temp[i].swap_bound == 0.0);
  }
}

TEST_CASE("swap mass bound counts prefix disagreements") {
  const std::vector<double> a{4, 3, 2, 1};
  const std::vector<double> b{3, 4, 1, 2};
  // Top-1 sets differ (1 of 1), top-2 agree, top-3 differ by one, top-4 agree.
  const double expect = 0.25 * (1.0 + 0.5 * (1.0 + 0.0) + 0.5 * (0.0 + 1.0 / 3.0) + 0.5 * (1.0 / 3.0 + 0.0));
  CHECK(swap_mass_bound(a, b) == doctest::Approx(expect));
  CHECK(swap_mass_bound(a, a) == 0.0);
}

TEST_CASE("identity shift reproduces the in-distribution evaluation") {
  auto c = tiny();
  c.shifts = {ShiftTransform::translation()};
  const auto report = cmd_shift_study(c);
  const auto id = report.rows_for("identity");
  const auto tr = report.rows_for("translation");
  REQUIRE(id.size() == 2);
  REQUIRE(tr.size() == 2);
  CHECK(id[0].mmd == 0.0);
  CHECK(tr[0].mmd > 0.0);
  auto plain = c;
  plain.models = {c.models.front()};
  const auto cap = cmd_sweep_capacity(plain);
  CHECK(cap.rows_for("logistic")[0].e_aurc == id[0].e_aurc);
  CHECK(cap.rows_for("logistic")[0].ece == id[0].ece);
}

TEST_CASE("report merges runs and rejects missing ones") {
  CHECK_THROWS(cmd_report({}, scratch("empty")));
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  auto ca = tiny();
  ca.models.resize(1);
  auto cb = ca;
  cb.delta = 0.1;
  write_run(cmd_sweep_capacity(ca), a);
  write_run(cmd_sweep_capacity(cb), b);
  const auto out = scratch("merged");
  cmd_report({a, b}, out);
  CHECK(fs::exists(out / ("gap_curve__" + ca.hash() + "__logistic.csv")));
  CHECK(fs::exists(out / ("gap_curve__" + cb.hash() + "__logistic.csv")));
  const auto merged = read_file(out / "report.csv");
  CHECK(std::count(merged.begin(), merged.end(), '\n') == 5);

  const auto single = scratch("single");
  cmd_report({a}, single);
  CHECK(read_file(single / "report.csv") == read_file(a / "report.csv"));

  try {
    cmd_report({a, scratch("missing")}, scratch("never"));
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("selgap_test_missing") != std::string::npos);
  }
}

TEST_CASE("runs are byte-reproducible") {
  const auto c = tiny();
  const auto a = scratch("repro_a");
  const auto b = scratch("repro_b");
  write_run(cmd_calibration_study(c), a);
  write_run(cmd_calibration_study(c), b);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    CHECK(read_file(entry.path()) == read_file(b / rel));
  }
}
