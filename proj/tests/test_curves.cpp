#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "selgap/curves.hpp"

using namespace selgap;

namespace {

std::vector<ScoredSample> make(std::vector<double> s, std::vector<int> c) {
  std::vector<ScoredSample> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back({s[i], c[i] != 0});
  return out;
}

}  // namespace

TEST_CASE("oracle bound is flat then hyperbolic") {
  CHECK(oracle_bound(0.8, 0.5) == 1.0);
  CHECK(oracle_bound(0.8, 0.8) == 1.0);
  CHECK(oracle_bound(0.8, 1.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(oracle_bound(0.5, 0.75) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(oracle_bound(0.0, 0.3) == 0.0);
  CHECK_THROWS(oracle_bound(0.5, 0.0));
  CHECK_THROWS(oracle_bound(0.5, 1.5));
  CHECK_THROWS(oracle_bound(1.2, 0.5));
}

TEST_CASE("accepted count rounds up and avoids float overshoot") {
  CHECK(accepted_count(0.3, 10) == 3);
  CHECK(accepted_count(0.31, 10) == 4);
  CHECK(accepted_count(1e-9, 10) == 1);
  CHECK(accepted_count(1.0, 7) == 7);
  CHECK_THROWS(accepted_count(0.0, 5));
}

TEST_CASE("four-point curve and areas by hand") {
  // Sorted scores 0.9, 0.8, 0.7, 0.6 with correctness 1, 1, 0, 1.
  const auto scored = make({0.7, 0.9, 0.6, 0.8}, {0, 1, 1, 1});
  const auto curve = empirical_curve(scored);
  REQUIRE(curve.points.size() == 4);
  CHECK(curve.points[0].accuracy == 1.0);
  CHECK(curve.points[1].accuracy == 1.0);
  CHECK(curve.points[2].accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(curve.points[3].accuracy == 0.75);
  CHECK(curve.a_full == 0.75);
  // Risk 0, 0, 1/3, 1/4 on the grid 1/4..1 with the first value held on (0, 1/4].
  CHECK(aurc(curve) == doctest::Approx(11.0 / 96.0).epsilon(1e-14));
  const auto gap = gap_curve(curve);
  // Oracle 1, 1, 1, 0.75: gap 0, 0, 1/3, 0.
  CHECK(gap.points[2].gap == doctest::Approx(1.0 / 3.0));
  CHECK(gap.points[3].gap == doctest::Approx(0.0));
  CHECK(gap.e_aurc == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
}

TEST_CASE("constant accuracy integrates exactly") {
  std::vector<double> v(37, 0.4);
  CHECK(integrate_prefix_grid(v) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("perfect ordering has zero gap everywhere") {
  const auto curve = empirical_curve(make({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}));
  for (const auto& p : gap_curve(curve).points) CHECK(p.gap == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ties are broken by index") {
  const auto scored = make({0.5, 0.5, 0.5}, {0, 1, 1});
  const auto curve = empirical_curve(scored);
  CHECK(curve.points[0].accuracy == 0.0);
  CHECK(curve.points[1].accuracy == 0.5);
  CHECK(max_tie_multiplicity(std::vector<double>{0.5, 0.5, 0.5, 0.1}) == 3);
}

TEST_CASE("curve agrees with an explicit rank count") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> level(0, 6);
  std::bernoulli_distribution coin(0.6);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> s;
    std::vector<int> c;
    for (int i = 0; i < 40; ++i) {
      s.push_back(level(rng) / 6.0);
      c.push_back(coin(rng) ? 1 : 0);
    }
    const auto curve = empirical_curve(make(s, c));
    const auto expect = oracle::prefix_accuracy(s, c);
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(curve.points[k].accuracy == expect[k]);
  }
}

TEST_CASE("strictly increasing transforms leave the curve unchanged") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s, t;
  std::vector<int> c;
  for (int i = 0; i < 200; ++i) {
    s.push_back(u(rng));
    t.push_back(std::exp(3.0 * s.back()) - 7.0);
    c.push_back(u(rng) < s.back() ? 1 : 0);
  }
  const auto a = empirical_curve(make(s, c));
  const auto b = empirical_curve(make(t, c));
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(a.points[k].accuracy == b.points[k].accuracy);
}

TEST_CASE("stat slack at the default configuration") {
  CHECK(stat_slack(10000, 0.05) == doctest::Approx(3.0 * std::sqrt(std::log(120.0) / 20000.0)));
  CHECK(stat_slack(10000, 0.05) == doctest::Approx(0.04642).epsilon(1e-3));
  CHECK_THROWS(stat_slack(0, 0.05));
  CHECK_THROWS(stat_slack(10, 1.0));
}

TEST_CASE("resampling picks the ceil prefix") {
  const auto curve = empirical_curve(make({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 1}));
  const auto gap = gap_curve(curve);
  const std::vector<double> grid{0.3, 0.5, 1.0};
  const auto r = resample(gap, 4, grid);
  CHECK(r[0].realized == 0.5);
  CHECK(r[0].coverage == 0.3);
  CHECK(r[1].realized == 0.5);
  CHECK(r[2].realized == 0.75);
  CHECK(uniform_grid(4) == std::vector<double>{0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("curve CSV carries footer rows") {
  const auto curve = empirical_curve(make({0.9, 0.8}, {1, 0}));
  std::ostringstream out;
  write_gap_csv(curve, gap_curve(curve), out);
  const auto text = out.str();
  CHECK(text.rfind("coverage,oracle,realized,gap\n", 0) == 0);
  CHECK(text.find("\naurc,") != std::string::npos);
  CHECK(text.find("\ne_aurc,") != std::string::npos);
  CHECK_THROWS(empirical_curve({}));
}
