#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "selgap/curves.hpp"
#include "selgap/decomposition.hpp"
#include "selgap/losspred.hpp"
#include "selgap/synthdata.hpp"

using namespace selgap;

TEST_CASE("sep examples") {
  CHECK(sep(std::vector<double>{0.5, 0.5}) == 0.5);
  CHECK(sep(std::vector<double>{0.0, 1.0, 0.0}) == 0.0);
  CHECK(sep(std::vector<double>{0.8, 0.2}) == doctest::Approx(0.2));
}

TEST_CASE("advantage identities") {
  const std::vector<double> s{0.1, 0.4, 0.3, 0.2};
  const std::vector<double> l{0, 1, 0, 1};
  CHECK(advantage(s, s, l) == 0.0);
  double base = 0.0;
  for (std::size_t i = 0; i < 4; ++i) base += (l[i] - s[i]) * (l[i] - s[i]) / 4.0;
  CHECK(advantage(l, s, l) == doctest::Approx(base).epsilon(1e-15));
  CHECK_THROWS(advantage(s, s, std::vector<double>{0, 1}));
}

TEST_CASE("advantage of the Bayes loss predictor matches fresh Monte Carlo") {
  // Predictor h = 1[x1 > 0.4] with a deliberately miscalibrated SEP.
  const auto task = GaussianMixtureTask::symmetric();
  const auto run = [&](std::uint64_t seed, std::vector<double>* per) {
    const auto data = sample_gaussian_task(task, 100000, seed);
    std::vector<double> lp, sp, loss;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double x1 = data.x(i)[0];
      const int h = x1 > 0.4 ? 1 : 0;
      const double eta1 = 1.0 / (1.0 + std::exp(-2.0 * x1));
      const double eta_h = h == 1 ? eta1 : 1.0 - eta1;
      const double conf = 1.0 / (1.0 + std::exp(-std::abs(x1 - 0.4)));
      lp.push_back(1.0 - eta_h);
      sp.push_back(1.0 - conf);
      loss.push_back(h == data.labels[i] ? 0.0 : 1.0);
      if (per) {
        const double a = loss.back() - sp.back(), b = loss.back() - lp.back();
        per->push_back(a * a - b * b);
      }
    }
    return advantage(lp, sp, loss);
  };
  std::vector<double> fresh;
  run(31, &fresh);
  double se = 0.0;
  const double mc = oracle::mean_and_se(fresh, &se);
  CHECK(std::abs(run(32, nullptr) - mc) <= 3.0 * std::sqrt(2.0) * se);
  CHECK(mc > 0.0);
}

TEST_CASE("weight class bounds and mce") {
  WeightClass c(4);
  CHECK_THROWS(mce(std::vector<double>{1, 1, 1, 1}, c));
  CHECK_THROWS(c.add("bad", {2.0, 0.0, 0.0, 0.0}));
  c.add_constant(0.0);
  const std::vector<double> r{0.5, -0.5, 0.2, -0.2};
  CHECK(mce(r, c) == 0.0);
  c.add_constant(1.0);
  CHECK(mce(r, c) == doctest::Approx(0.0).epsilon(1e-15));
  const double before = mce(r, c);
  c.add("first", {1.0, 0.0, 0.0, 0.0});
  CHECK(mce(r, c) >= before);
  CHECK(mce(r, c) == doctest::Approx(0.125));
  c.add_affine(1, 2, 0.5, -0.5);
  CHECK(c.size() == 4);
  CHECK_THROWS(c.add_affine(1, 2, 0.8, 0.8));
}

TEST_CASE("quantile bins partition the sample") {
  const std::vector<double> f{0.3, 0.1, 0.4, 0.2, 0.6, 0.5};
  WeightClass c(6);
  c.add_feature_quantile_bins(f, 1, 3);
  REQUIRE(c.size() == 3);
  for (std::size_t i = 0; i < 6; ++i) {
    double total = 0.0;
    for (std::size_t m = 0; m < 3; ++m) total += c.member(m)[i];
    CHECK(total == 1.0);
  }
  CHECK(c.member(0)[1] == 1.0);
  CHECK(c.member(0)[3] == 1.0);
}

TEST_CASE("difference indicator recovers c times eps_rank on ten points") {
  const std::vector<double> eta_h{0.95, 0.9, 0.85, 0.8, 0.7, 0.65, 0.6, 0.55, 0.52, 0.51};
  const std::vector<double> scores{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const double c = 0.5;
  WeightClass w(10);
  w.add_difference_indicator(scores, eta_h, c);
  // With h = 1 the residual Y - h is minus the loss, whose conditional mean is
  // -(1 - eta_h); delta_c has zero mean so the weighted residual is c eps_rank.
  std::vector<double> residual;
  for (double e : eta_h) residual.push_back(-(1.0 - e));
  const double er = eps_rank(eta_h, scores, c);
  CHECK(er > 0.2);
  CHECK(mce(residual, w) >= c * er - 1e-12);
  CHECK(mce(residual, w) == doctest::Approx(c * er).epsilon(1e-12));
}

TEST_CASE("corollary with the oracle score") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::vector<double> eta_h, conf, loss;
  for (int i = 0; i < 500; ++i) {
    eta_h.push_back(u(rng));
    conf.push_back(eta_h.back());
    loss.push_back(u(rng) > eta_h.back() ? 1.0 : 0.0);
  }
  const auto rows = corollary_check(eta_h, eta_h, conf, loss, uniform_grid(10));
  for (const auto& r : rows) {
    CHECK(r.eps_rank == 0.0);
    CHECK(r.holds);
    CHECK(r.adv_star == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("corollary for a reversed score on a small instance") {
  const std::vector<double> eta_h{0.95, 0.9, 0.85, 0.8, 0.6, 0.55};
  const std::vector<double> reversed{0.05, 0.1, 0.15, 0.2, 0.4, 0.45};
  // The self-estimate follows the reversed order, so the Bayes loss
  // predictor gains a large advantage.
  std::vector<double> conf, loss;
  for (double s : reversed) conf.push_back(0.5 + s);
  for (double e : eta_h) loss.push_back(e > 0.7 ? 0.0 : 1.0);
  const auto rows = corollary_check(eta_h, reversed, conf, loss, uniform_grid(6));
  for (const auto& r : rows) {
    CHECK(r.eps_rank >= 0.0);
    CHECK(r.holds);
  }
  CHECK(rows[2].eps_rank > 0.2);
}

TEST_CASE("loss predictor on an all-zero target predicts near zero") {
  LossFeatures f;
  f.dim = 2;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    f.values.push_back(u(rng));
    f.values.push_back(u(rng));
    f.losses.push_back(0.0);
    f.sep.push_back(0.1);
  }
  LossPredictorConfig cfg;
  cfg.train.epochs = 150;
  const auto lp = train_loss_predictor(f, FeatureMode::input_aware, cfg);
  for (double v : lp.predict_all(f)) {
    CHECK(v >= 0.0);
    CHECK(v <= 0.02);
  }
  const auto trace = advantage_trace(f, f, FeatureMode::input_aware, cfg);
  CHECK(trace.size() == 150);
  CHECK(trace.front().adv_delta == 0.0);
  CHECK(trace.back().adv_test > 0.0);
}

TEST_CASE("feature mode names round-trip") {
  for (auto m : {FeatureMode::prediction_only, FeatureMode::input_aware, FeatureMode::representation_aware}) {
    CHECK(feature_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS(feature_mode_from_string("nope"));
}

TEST_CASE("default weight class layout") {
  const std::vector<double> f{0.3, 1.0, 0.1, 2.0, 0.4, 3.0, 0.2, 4.0};
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> eta{0.9, 0.8, 0.7, 0.6};
  const std::vector<double> grid{0.5, 1.0};
  const auto c = default_weight_class(f, 2, s, eta, grid, 2);
  REQUIRE(c.size() == 2 * 2 + 2);
  // Reversed score: the top half by eta is {0, 1}, by score {2, 3}.
  CHECK(c.member(4) == std::vector<double>{1.0, 1.0, -1.0, -1.0});
  CHECK(c.member(5) == std::vector<double>{0.0, 0.0, 0.0, 0.0});
  CHECK(c.member(0) == std::vector<double>{0.0, 1.0, 0.0, 1.0});
}
