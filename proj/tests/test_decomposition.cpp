#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "selgap/curves.hpp"
#include "selgap/decomposition.hpp"
#include "selgap/synthdata.hpp"

using namespace selgap;

namespace {

LabeledDataset binary_with_eta(const std::vector<double>& eta1, const std::vector<int>& labels) {
  LabeledDataset d;
  d.dim = 1;
  d.num_classes = 2;
  for (std::size_t i = 0; i < eta1.size(); ++i) {
    d.features.push_back(static_cast<double>(i));
    d.labels.push_back(labels[i]);
    d.eta_true.push_back(1.0 - eta1[i]);
    d.eta_true.push_back(eta1[i]);
  }
  return d;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("correctness posterior follows the predicted class") {
  const std::vector<double> eta{0.3, 0.7};
  CHECK(correctness_posterior(eta, 1) == 0.7);
  CHECK(correctness_posterior(eta, 0) == doctest::Approx(0.3));
  CHECK_THROWS(correctness_posterior(eta, 2));
}

TEST_CASE("eps_bayes extremes") {
  const auto ambiguous = binary_with_eta({0.5, 0.5, 0.5}, {0, 1, 0});
  CHECK(eps_bayes(ambiguous, all_indices(3)) == 0.5);
  const auto clean = binary_with_eta({0.0, 1.0, 1.0}, {0, 1, 1});
  CHECK(eps_bayes(clean, all_indices(3)) == 0.0);
  CHECK_THROWS(eps_bayes(clean, std::vector<std::size_t>{}));
}

TEST_CASE("eps_bayes on the symmetric Gaussian task matches quadrature") {
  const auto data = sample_gaussian_task(GaussianMixtureTask::symmetric(), 1000000, 77);
  const double value = eps_bayes(data, all_indices(data.size()));
  std::vector<double> per;
  per.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) per.push_back(std::min(data.eta(i)[0], data.eta(i)[1]));
  double se = 0.0;
  oracle::mean_and_se(per, &se);
  CHECK(std::abs(value - oracle::symmetric_gaussian_bayes_error()) <= 2.0 * se);
}

TEST_CASE("eps_approx with constant predictions") {
  const auto d = binary_with_eta({0.9, 0.2, 0.6}, {1, 0, 1});
  const std::vector<int> ones(3, 1), zeros(3, 0);
  CHECK(eps_approx(d, ones, all_indices(3)) == 0.0);
  CHECK(eps_approx(d, zeros, all_indices(3)) == doctest::Approx((0.8 + 0.6 + 0.2) / 3.0));
}

TEST_CASE("eps_approx of a fixed logistic rule matches fresh Monte Carlo") {
  // h(x) = 1 when x1 > 0.3: the term is |1 - 2 eta| on the h = 0 branch.
  const auto task = GaussianMixtureTask::symmetric();
  const auto run = [&](std::uint64_t seed, std::vector<double>* per) {
    const auto data = sample_gaussian_task(task, 100000, seed);
    std::vector<int> h(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) h[i] = data.x(i)[0] > 0.3 ? 1 : 0;
    if (per) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double eta = 1.0 / (1.0 + std::exp(-2.0 * data.x(i)[0]));
        per->push_back(h[i] == 0 ? std::abs(1.0 - 2.0 * eta) : 0.0);
      }
    }
    return eps_approx(data, h, all_indices(data.size()));
  };
  std::vector<double> fresh;
  run(202, &fresh);
  double se = 0.0;
  const double mc = oracle::mean_and_se(fresh, &se);
  CHECK(std::abs(run(101, nullptr) - mc) <= 2.0 * std::sqrt(2.0) * se);
}

TEST_CASE("eps_rank examples") {
  const std::vector<double> eta_h{0.9, 0.8, 0.2, 0.1};
  const std::vector<double> reversed{-0.9, -0.8, -0.2, -0.1};
  CHECK(eps_rank(eta_h, eta_h, 0.5) == 0.0);
  CHECK(eps_rank(eta_h, reversed, 0.5) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(d_rank(reversed, eta_h, 0.5) == 1.0);
  CHECK(d_rank(eta_h, eta_h, 0.5) == 0.0);
}

TEST_CASE("eps_rank is nonnegative and matches explicit sets") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rep % 30);
    std::vector<double> eta(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      eta[i] = u(rng);
      s[i] = std::round(u(rng) * 4.0);
    }
    for (std::size_t k = 1; k <= n; ++k) {
      const double c = static_cast<double>(k) / static_cast<double>(n);
      const auto mo = oracle::top_k_mask(eta, k);
      const auto ms = oracle::top_k_mask(s, k);
      double a = 0.0, b = 0.0, sym = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        a += mo[i] ? eta[i] : 0.0;
        b += ms[i] ? eta[i] : 0.0;
        sym += mo[i] != ms[i] ? 1.0 : 0.0;
      }
      CHECK(eps_rank(eta, s, c) == doctest::Approx((a - b) / static_cast<double>(k)).epsilon(1e-12));
      CHECK(eps_rank(eta, s, c) >= -1e-12);
      CHECK(d_rank(s, eta, c) == doctest::Approx(sym / static_cast<double>(n)));
    }
  }
}

TEST_CASE("ideal regime has zero gap and zero terms") {
  // Noiseless separable data, Bayes predictor, oracle score.
  const auto d = binary_with_eta({1.0, 0.0, 1.0, 0.0, 1.0}, {1, 0, 1, 0, 1});
  const std::vector<int> h{1, 0, 1, 0, 1};
  const std::vector<double> s{1.0, 1.0, 1.0, 1.0, 1.0};
  const auto dec = decompose(d, h, s, uniform_grid(5), 0.05);
  for (const auto& r : dec.rows) {
    CHECK(r.gap == 0.0);
    CHECK(r.eps_bayes == 0.0);
    CHECK(r.eps_rank == 0.0);
    CHECK(r.holds);
  }
}

TEST_CASE("reversed scores on ten points: large gap, bound still holds") {
  const std::vector<double> eta1{0.95, 0.9, 0.85, 0.8, 0.75, 0.3, 0.25, 0.2, 0.1, 0.05};
  const std::vector<int> labels{1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
  const auto d = binary_with_eta(eta1, labels);
  std::vector<int> h;
  std::vector<double> s;
  for (double e : eta1) {
    h.push_back(e >= 0.5 ? 1 : 0);
    s.push_back(-std::max(e, 1.0 - e));
  }
  const auto dec = decompose(d, h, s, uniform_grid(10), 0.05);
  double worst_gap = 0.0;
  for (const auto& r : dec.rows) {
    worst_gap = std::max(worst_gap, r.gap);
    CHECK(r.holds);
    CHECK(r.bound_rhs == doctest::Approx(r.eps_bayes + r.eps_approx + r.eps_rank + r.stat_slack));
  }
  CHECK(worst_gap >= 0.5);
}

TEST_CASE("decomposition is invariant to monotone score maps") {
  const auto data = sample_gaussian_task(GaussianMixtureTask::symmetric(), 2000, 3);
  std::vector<int> h;
  std::vector<double> s, t;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = 1.7 * data.x(i)[0] + 0.2 * data.x(i)[1];
    h.push_back(z > 0 ? 1 : 0);
    s.push_back(std::abs(z));
    t.push_back(std::atan(s.back()) * 5.0 + 1.0);
  }
  const auto grid = uniform_grid(20);
  const auto a = decompose(data, h, s, grid, 0.05);
  const auto b = decompose(data, h, t, grid, 0.05);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(a.rows[k].gap == b.rows[k].gap);
    CHECK(a.rows[k].eps_rank == b.rows[k].eps_rank);
    CHECK(a.rows[k].eps_approx == b.rows[k].eps_approx);
  }
}

TEST_CASE("oracle score zeroes the ranking term") {
  const auto data = sample_gaussian_task(GaussianMixtureTask::symmetric(), 5000, 4);
  std::vector<int> h;
  for (std::size_t i = 0; i < data.size(); ++i) h.push_back(data.x(i)[0] > 0.1 ? 1 : 0);
  const auto eta_h = correctness_posteriors(data, h);
  const auto dec = decompose(data, h, eta_h, uniform_grid(10), 0.05);
  for (const auto& r : dec.rows) {
    CHECK(r.eps_rank == 0.0);
    CHECK(r.d_rank == 0.0);
    CHECK(r.gap <= r.eps_bayes + r.eps_approx + r.stat_slack);
  }
  std::ostringstream out;
  write_decomposition_csv(dec, out);
  CHECK(out.str().rfind("coverage,gap,eps_bayes,eps_approx,eps_rank,d_rank,eps_stat,bound_rhs,holds\n", 0) == 0);
}

TEST_CASE("decompose requires posteriors") {
  LabeledDataset d;
  d.dim = 1;
  d.features = {0.0};
  d.labels = {0};
  const std::vector<int> h{0};
  const std::vector<double> s{1.0}, grid{1.0};
  CHECK_THROWS(decompose(d, h, s, grid, 0.05));
}
