#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "selgap/calibration.hpp"
#include "selgap/models.hpp"

using namespace selgap;

namespace {
const std::vector<double> z1{-2.0, -3.0, -3.0};
const std::vector<double> z2{0.0, -0.1, -3.0};
}  // namespace

TEST_CASE("tempered confidences of the three-class example") {
  CHECK(tempered_max_probability(z1, 1.0) == doctest::Approx(0.576).epsilon(1e-3));
  CHECK(tempered_max_probability(z2, 1.0) == doctest::Approx(0.512).epsilon(2e-3));
  CHECK(tempered_max_probability(z1, 3.0) == doctest::Approx(0.411).epsilon(1e-3));
  CHECK(tempered_max_probability(z2, 3.0) == doctest::Approx(0.428).epsilon(1e-3));
  const auto p = apply_temperature(z1, 1.0);
  CHECK(p[0] == doctest::Approx(tempered_max_probability(z1, 1.0)).epsilon(1e-14));
}

TEST_CASE("high temperature flattens toward uniform") {
  const auto p = apply_temperature(z2, 1e6);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("argmax does not depend on temperature") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> z{g(rng), g(rng), g(rng), g(rng)};
    const auto a = apply_temperature(z, 1.0);
    const auto b = apply_temperature(z, 0.1 + i * 0.2);
    CHECK(std::max_element(a.begin(), a.end()) - a.begin() == std::max_element(b.begin(), b.end()) - b.begin());
  }
}

TEST_CASE("swap detector finds one crossing for the example") {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.5 + i * 0.05);
  const auto r = find_swap_temperatures(z1, z2, grid);
  REQUIRE(r.crossings.size() == 1);
  CHECK(r.crossings[0].lo > 1.0);
  CHECK(r.crossings[0].hi < 3.0);
  CHECK(r.crossings[0].hi - r.crossings[0].lo <= 1e-6);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("identical logits are degenerate") {
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const auto r = find_swap_temperatures(z1, z1, grid);
  CHECK(r.degenerate);
  CHECK(r.crossings.empty());
}

TEST_CASE("two classes never swap") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i) grid.push_back(i * 0.05);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> a{g(rng), g(rng)}, b{g(rng), g(rng)};
    CHECK(find_swap_temperatures(a, b, grid).crossings.empty());
  }
}

TEST_CASE("temperature fit recovers the generating temperature") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<double> rows;
  std::vector<std::vector<double>> nested;
  std::vector<int> labels;
  for (int i = 0; i < 4000; ++i) {
    std::vector<double> z{g(rng), g(rng), g(rng)};
    const auto p = softmax(z);
    std::discrete_distribution<int> pick(p.begin(), p.end());
    labels.push_back(pick(rng));
    rows.insert(rows.end(), z.begin(), z.end());
    nested.push_back(z);
  }
  const auto fit = fit_temperature(rows, 3, labels);
  const double t = fit.calibrator.temperature_value();
  CHECK(t >= 0.95);
  CHECK(t <= 1.05);
  CHECK(t == doctest::Approx(oracle::grid_search_temperature(nested, labels, -3.0, 3.0, 6000)).epsilon(2e-3));

  std::vector<double> doubled(rows);
  for (double& v : doubled) v *= 2.0;
  const double t2 = fit_temperature(doubled, 3, labels).calibrator.temperature_value();
  CHECK(t2 / t == doctest::Approx(2.0).epsilon(0.05));

  const auto clamped = fit_temperature(rows, 3, labels, {1.0, 2.0});
  CHECK(clamped.at_boundary);
  CHECK(clamped.calibrator.temperature_value() == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("identical logit rows warn and keep T = 1") {
  const std::vector<double> rows{1.0, 0.0, 1.0, 0.0, 1.0, 0.0};
  const std::vector<int> labels{0, 1, 0};
  const auto fit = fit_temperature(rows, 2, labels);
  CHECK(fit.warning.has_value());
  CHECK(fit.calibrator.temperature_value() == 1.0);
}

TEST_CASE("isotonic fit pools the violating pair") {
  const std::vector<double> s{0.1, 0.35, 0.4, 0.8};
  const std::vector<double> y{0, 1, 0, 1};
  const auto v = isotonic_fit_values(s, y);
  CHECK(v == std::vector<double>{0.0, 0.5, 0.5, 1.0});
  CHECK(v == oracle::isotonic_brute_force(s, y));
  const auto cal = fit_isotonic(s, y);
  CHECK(cal.apply(0.375) == doctest::Approx(0.5));
  CHECK(cal.apply(0.6) == doctest::Approx(0.75));
  CHECK(cal.apply(-1.0) == 0.0);
  CHECK(cal.apply(2.0) == 1.0);
}

TEST_CASE("isotonic fit of monotone data is the identity") {
  const std::vector<double> s{0.1, 0.2, 0.3};
  const std::vector<double> y{0.1, 0.4, 0.9};
  CHECK(isotonic_fit_values(s, y) == y);
  const std::vector<double> ones{1, 1, 1};
  CHECK(isotonic_fit_values(s, ones) == ones);
}

TEST_CASE("isotonic fit pools tied scores before PAV") {
  const std::vector<double> s{0.5, 0.5, 0.2};
  const std::vector<double> y{1, 0, 0};
  const auto v = isotonic_fit_values(s, y);
  CHECK(v[0] == 0.5);
  CHECK(v[1] == 0.5);
  CHECK(v[2] == 0.0);
}

TEST_CASE("isotonic fit matches brute force on random instances") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> s, y;
    const int n = 1 + rep % 8;
    for (int i = 0; i < n; ++i) {
      s.push_back(u(rng));
      y.push_back(u(rng));
    }
    const auto a = isotonic_fit_values(s, y);
    const auto b = oracle::isotonic_brute_force(s, y);
    for (int i = 0; i < n; ++i) CHECK(a[static_cast<std::size_t>(i)] == doctest::Approx(b[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("histogram binning maps to bin accuracy") {
  const std::vector<double> s{0.05, 0.1, 0.95, 0.9};
  const std::vector<double> y{0, 1, 1, 1};
  const auto h = fit_histogram(s, y, 2);
  CHECK(h.apply(0.2) == 0.5);
  CHECK(h.apply(0.5) == 0.5);
  CHECK(h.apply(0.51) == 1.0);
  const auto empty = fit_histogram(s, y, 4);
  CHECK(empty.apply(0.3) == 0.375);
}

TEST_CASE("ece examples") {
  const std::vector<double> c01{0, 1, 1, 0};
  CHECK(ece(c01, c01).ece == 0.0);
  const std::vector<double> ones{1, 1, 1, 1};
  const std::vector<double> half{1, 0, 1, 0};
  const auto r = ece(ones, half);
  CHECK(r.ece == 0.5);
  std::size_t total = 0;
  for (const auto& b : r.bins) total += b.count;
  CHECK(total == 4);
  CHECK(r.bins.back().count == 4);
  CHECK_THROWS(ece(std::vector<double>{1.5}, std::vector<double>{1}));
  std::ostringstream out;
  write_reliability_csv(r, out);
  CHECK(out.str().find("ece,0.5") != std::string::npos);
}

TEST_CASE("calibrator invariants are enforced") {
  CHECK_THROWS(Calibrator::temperature(0.0));
  CHECK_THROWS(Calibrator::isotonic({0.0, 1.0}, {0.5, 0.2}));
  CHECK_THROWS(Calibrator::histogram({0.0, 1.0}, {1.5}));
  CHECK_THROWS(Calibrator::temperature(2.0).apply(0.3));
}
