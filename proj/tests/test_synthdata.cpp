#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "selgap/synthdata.hpp"

using namespace selgap;

TEST_CASE("symmetric Gaussian task: moments and analytic posterior") {
  const auto task = GaussianMixtureTask::symmetric();
  const auto data = sample_gaussian_task(task, 200000, 1);
  double m0 = 0.0, m1 = 0.0, n0 = 0.0, n1 = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (data.labels[i] == 0 ? m0 : m1) += data.x(i)[0];
    (data.labels[i] == 0 ? n0 : n1) += 1.0;
    const double expect = 1.0 / (1.0 + std::exp(-2.0 * data.x(i)[0]));
    CHECK(data.eta(i)[1] == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(m0 / n0 == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(m1 / n1 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(n0 / 200000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("Gaussian task validation") {
  auto bad = GaussianMixtureTask::symmetric();
  bad.covariance = {1.0, 2.0, 2.0, 1.0};
  CHECK_THROWS(bad.validate());
  bad = GaussianMixtureTask::symmetric();
  bad.priors = {0.7, 0.7};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("three-class posterior sums to one") {
  GaussianMixtureTask t;
  t.means = {{0.0, 1.0}, {-1.0, -0.5}, {1.0, -0.5}};
  t.priors = {0.2, 0.3, 0.5};
  const auto oracle = analytic_oracle(t);
  const auto p = oracle(std::vector<double>{0.3, -0.2});
  CHECK(p.size() == 3);
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two moons geometry") {
  const auto a = moon_point(0, 0.0);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(0.0));
  const auto b = moon_point(1, 0.0);
  CHECK(b[0] == doctest::Approx(0.0));
  CHECK(b[1] == doctest::Approx(0.5));
  const auto top = moon_point(0, 3.14159265358979323846 / 2.0);
  CHECK(top[1] == doctest::Approx(1.0));
  TwoMoonsTask task;
  task.noise_sigma = 0.1;
  const auto d = sample_two_moons(task, 101, 2);
  std::size_t zeros = 0;
  for (int y : d.labels) zeros += y == 0 ? 1 : 0;
  CHECK(zeros == 51);
  CHECK_FALSE(d.has_eta());
  task.noise_sigma = 0.0;
  CHECK_THROWS(estimate_posterior_grid(d, task, 100, 1));
}

TEST_CASE("kernel and grid posteriors agree with plain Monte Carlo") {
  TwoMoonsTask task;
  task.noise_sigma = 0.3;
  const auto exact = kernel_posterior(task, 2000, 5);
  const auto data = sample_two_moons(task, 500, 6);
  const auto grid = estimate_posterior_grid(data, task, 2000, 5);
  const std::vector<Vec2> queries{{0.0, 0.25}, {0.5, 0.25}, {1.0, 0.0}, {-0.5, 0.6}, {1.5, -0.2}};
  for (const auto& q : queries) {
    const double mc = oracle::moons_posterior_mc(q, 0.3, 1000000, 17);
    const std::vector<double> x{q[0], q[1]};
    CHECK(std::abs(exact(x)[1] - mc) < 5e-3);
    CHECK(std::abs(grid(x)[1] - mc) < 2e-2);
  }
}

TEST_CASE("grid oracle clamps outside the box") {
  const auto exact = analytic_oracle(GaussianMixtureTask::symmetric());
  const auto tab = tabulate_on_grid(exact, {-2.0, 2.0, -2.0, 2.0}, 64);
  const std::vector<double> inside{0.3, 0.1}, outside{10.0, 0.0}, edge{2.0, 0.0};
  CHECK(std::abs(tab(inside)[1] - exact(inside)[1]) < 1e-3);
  CHECK(tab(outside)[1] == doctest::Approx(tab(edge)[1]));
}

TEST_CASE("shift transforms") {
  const auto shear = ShiftTransform::shear();
  const auto s = shear.apply({1.0, 2.0});
  CHECK(s[0] == 3.5);
  CHECK(s[1] == 2.0);
  const auto t = ShiftTransform::translation().apply({0.0, 0.0});
  CHECK(t[0] == 1.0);
  CHECK(t[1] == -0.5);
  const auto r = ShiftTransform::rotation().apply({1.0, 0.0});
  CHECK(std::abs(r[0] - std::cos(3.14159265358979323846 / 6.0)) < 1e-12);
  CHECK(std::abs(r[1] - std::sin(3.14159265358979323846 / 6.0)) < 1e-12);
  const auto id = ShiftTransform::identity().apply({0.7, -0.2});
  CHECK(id[0] == 0.7);
  CHECK(id[1] == -0.2);
}

TEST_CASE("apply_shift keeps labels and drops posteriors") {
  const auto d = sample_gaussian_task(GaussianMixtureTask::symmetric(), 10, 1);
  const auto s = apply_shift(d, ShiftTransform::translation());
  CHECK(s.labels == d.labels);
  CHECK_FALSE(s.has_eta());
  CHECK(s.x(3)[0] == doctest::Approx(d.x(3)[0] + 1.0));
}

TEST_CASE("mmd separates a translated sample") {
  TwoMoonsTask task;
  const auto a = sample_two_moons(task, 600, 1);
  const auto b = sample_two_moons(task, 600, 2);
  const double same = mmd_rbf(a, b);
  const double moved = mmd_rbf(a, apply_shift(b, ShiftTransform::translation()));
  CHECK(same < 0.1);
  CHECK(moved > 3.0 * same);
  CHECK(mmd_rbf(a, a) == 0.0);
  CHECK(median_heuristic_bandwidth(a, b) > 0.0);
}

TEST_CASE("dataset CSV round trip") {
  const auto d = sample_gaussian_task(GaussianMixtureTask::symmetric(), 25, 9);
  std::ostringstream out;
  write_dataset_csv(d, out);
  std::istringstream in(out.str());
  const auto back = read_dataset_csv(in);
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
  CHECK(back.eta_true == d.eta_true);
  std::istringstream bad("x0,label\n1.0\n");
  CHECK_THROWS(read_dataset_csv(bad));
}

TEST_CASE("sampling is deterministic per seed") {
  TwoMoonsTask task;
  CHECK(sample_two_moons(task, 50, 4).features == sample_two_moons(task, 50, 4).features);
  CHECK(sample_two_moons(task, 50, 4).features != sample_two_moons(task, 50, 5).features);
}
