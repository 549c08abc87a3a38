#include "selgap/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "selgap/random.hpp"

namespace selgap {

namespace {

struct Cholesky2 {
  double l11, l21, l22;
};

Cholesky2 cholesky(const Mat2& m) {
  const double a = m[0], b = m[1], c = m[2], d = m[3];
  if (std::abs(b - c) > 1e-12 * std::max(1.0, std::abs(b))) {
    throw std::invalid_argument("gaussian task: covariance is not symmetric");
  }
  if (!(a > 0.0) || !(a * d - b * c > 0.0)) {
    throw std::invalid_argument("gaussian task: covariance is not positive definite");
  }
  const double l11 = std::sqrt(a);
  const double l21 = c / l11;
  return {l11, l21, std::sqrt(d - l21 * l21)};
}

Mat2 inverse(const Mat2& m) {
  const double det = m[0] * m[3] - m[1] * m[2];
  return {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
}

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : v) x /= total;
}

}  // namespace

GaussianMixtureTask GaussianMixtureTask::binary(Vec2 mean0, Vec2 mean1,
                                                Mat2 covariance,
                                                double class_prior) {
  GaussianMixtureTask task;
  task.means = {mean0, mean1};
  task.covariance = covariance;
  task.priors = {1.0 - class_prior, class_prior};
  task.validate();
  return task;
}

GaussianMixtureTask GaussianMixtureTask::symmetric() {
  return binary({-1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0, 0.0, 1.0}, 0.5);
}

void GaussianMixtureTask::validate() const {
  if (means.size() < 2) throw std::invalid_argument("gaussian task: need >= 2 classes");
  if (priors.size() != means.size()) {
    throw std::invalid_argument("gaussian task: one prior per class required");
  }
  double total = 0.0;
  for (double p : priors) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("gaussian task: class prior must lie in (0,1)");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("gaussian task: priors must sum to 1");
  }
  cholesky(covariance);
}

LabeledDataset sample_gaussian_task(const GaussianMixtureTask& task, std::size_t n,
                                    std::uint64_t seed) {
  task.validate();
  if (n == 0) throw std::invalid_argument("sample_gaussian_task: n must be >= 1");
  const auto chol = cholesky(task.covariance);
  Rng rng(seed);
  std::discrete_distribution<int> pick(task.priors.begin(), task.priors.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  LabeledDataset data;
  data.dim = 2;
  data.num_classes = task.num_classes();
  data.seed = seed;
  data.features.reserve(2 * n);
  data.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = pick(rng);
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const auto& mu = task.means[static_cast<std::size_t>(y)];
    data.features.push_back(mu[0] + chol.l11 * z1);
    data.features.push_back(mu[1] + chol.l21 * z1 + chol.l22 * z2);
    data.labels.push_back(y);
  }
  return analytic_oracle(task).annotate(std::move(data));
}

PosteriorOracle analytic_oracle(const GaussianMixtureTask& task) {
  task.validate();
  const Mat2 precision = inverse(task.covariance);
  std::vector<double> log_priors;
  for (double p : task.priors) log_priors.push_back(std::log(p));
  auto means = task.means;
  return PosteriorOracle(
      task.num_classes(), Provenance::analytic,
      [precision, log_priors, means](std::span<const double> x, std::span<double> out) {
        if (x.size() != 2) throw std::invalid_argument("gaussian oracle: expects 2-D input");
        for (std::size_t k = 0; k < means.size(); ++k) {
          const double d0 = x[0] - means[k][0];
          const double d1 = x[1] - means[k][1];
          const double q = d0 * (precision[0] * d0 + precision[1] * d1) +
                           d1 * (precision[2] * d0 + precision[3] * d1);
          out[k] = log_priors[k] - 0.5 * q;
        }
        softmax_inplace(out);
      });
}

void TwoMoonsTask::validate() const {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("two moons: noise_sigma must be >= 0");
  if (n_grid < 32) throw std::invalid_argument("two moons: n_grid must be >= 32");
}

Vec2 moon_point(int moon, double t) {
  if (moon == 0) return {std::cos(t), std::sin(t)};
  return {1.0 - std::cos(t), 0.5 - std::sin(t)};
}

LabeledDataset sample_two_moons(const TwoMoonsTask& task, std::size_t n,
                                std::uint64_t seed) {
  task.validate();
  if (n < 2) throw std::invalid_argument("sample_two_moons: n must be >= 2");
  const std::size_t counts[2] = {(n + 1) / 2, n / 2};
  Rng rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);

  std::vector<double> xs;
  std::vector<int> ys;
  xs.reserve(2 * n);
  ys.reserve(n);
  for (int moon = 0; moon < 2; ++moon) {
    const std::size_t m = counts[moon];
    for (std::size_t i = 0; i < m; ++i) {
      const double t = m == 1 ? 0.0
                              : std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(m - 1);
      const Vec2 p = moon_point(moon, t);
      xs.push_back(p[0] + task.noise_sigma * jitter(rng));
      xs.push_back(p[1] + task.noise_sigma * jitter(rng));
      ys.push_back(moon);
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  LabeledDataset data;
  data.dim = 2;
  data.num_classes = 2;
  data.seed = seed;
  data.features.reserve(2 * n);
  data.labels.reserve(n);
  for (std::size_t i : order) {
    data.features.push_back(xs[2 * i]);
    data.features.push_back(xs[2 * i + 1]);
    data.labels.push_back(ys[i]);
  }
  return data;
}

PosteriorOracle kernel_posterior(const TwoMoonsTask& task, std::size_t mc_samples,
                                 std::uint64_t seed) {
  task.validate();
  if (task.noise_sigma <= 0.0) {
    throw std::invalid_argument(
        "kernel posterior: noise_sigma must be > 0 (the posterior is degenerate at 0)");
  }
  if (mc_samples == 0) throw std::invalid_argument("kernel posterior: mc_samples must be >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto curve = std::make_shared<std::vector<double>>();  // moon-major (x, y) pairs
  curve->reserve(4 * mc_samples);
  for (int moon = 0; moon < 2; ++moon) {
    for (std::size_t j = 0; j < mc_samples; ++j) {
      const double t = std::numbers::pi * (static_cast<double>(j) + unit(rng)) /
                       static_cast<double>(mc_samples);
      const Vec2 p = moon_point(moon, t);
      curve->push_back(p[0]);
      curve->push_back(p[1]);
    }
  }
  const double inv_two_var = 1.0 / (2.0 * task.noise_sigma * task.noise_sigma);
  return PosteriorOracle(
      2, Provenance::analytic,
      [curve, mc_samples, inv_two_var](std::span<const double> x, std::span<double> out) {
        if (x.size() != 2) throw std::invalid_argument("kernel posterior: expects 2-D input");
        for (std::size_t moon = 0; moon < 2; ++moon) {
          const double* c = curve->data() + moon * 2 * mc_samples;
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < mc_samples; ++j) {
            const double dx = x[0] - c[2 * j], dy = x[1] - c[2 * j + 1];
            best = std::max(best, -(dx * dx + dy * dy) * inv_two_var);
          }
          double total = 0.0;
          for (std::size_t j = 0; j < mc_samples; ++j) {
            const double dx = x[0] - c[2 * j], dy = x[1] - c[2 * j + 1];
            total += std::exp(-(dx * dx + dy * dy) * inv_two_var - best);
          }
          out[moon] = best + std::log(total);
        }
        softmax_inplace(out);
      });
}

GridBox bounding_box(const LabeledDataset& data, double pad) {
  if (data.empty() || data.dim != 2) {
    throw std::invalid_argument("bounding_box: expects nonempty 2-D data");
  }
  GridBox box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = data.x(i);
    box.x_lo = std::min(box.x_lo, p[0]);
    box.x_hi = std::max(box.x_hi, p[0]);
    box.y_lo = std::min(box.y_lo, p[1]);
    box.y_hi = std::max(box.y_hi, p[1]);
  }
  box.x_lo -= pad;
  box.x_hi += pad;
  box.y_lo -= pad;
  box.y_hi += pad;
  return box;
}

PosteriorOracle tabulate_on_grid(const PosteriorOracle& exact, GridBox box, int n_grid) {
  if (n_grid < 2) throw std::invalid_argument("tabulate_on_grid: n_grid must be >= 2");
  if (!(box.x_hi > box.x_lo) || !(box.y_hi > box.y_lo)) {
    throw std::invalid_argument("tabulate_on_grid: empty box");
  }
  const std::size_t k = exact.num_classes();
  const std::size_t g = static_cast<std::size_t>(n_grid);
  auto table = std::make_shared<std::vector<double>>(g * g * k);
  const double hx = (box.x_hi - box.x_lo) / static_cast<double>(g - 1);
  const double hy = (box.y_hi - box.y_lo) / static_cast<double>(g - 1);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      const double node[2] = {box.x_lo + static_cast<double>(i) * hx,
                              box.y_lo + static_cast<double>(j) * hy};
      exact.evaluate(node, {table->data() + (i * g + j) * k, k});
    }
  }
  return PosteriorOracle(
      k, Provenance::grid_estimate,
      [table, box, g, k, hx, hy](std::span<const double> x, std::span<double> out) {
        if (x.size() != 2) throw std::invalid_argument("grid oracle: expects 2-D input");
        const double last = static_cast<double>(g - 1);
        const double u = std::clamp((x[0] - box.x_lo) / hx, 0.0, last);
        const double v = std::clamp((x[1] - box.y_lo) / hy, 0.0, last);
        const std::size_t i = std::min(static_cast<std::size_t>(u), g - 2);
        const std::size_t j = std::min(static_cast<std::size_t>(v), g - 2);
        const double fu = u - static_cast<double>(i);
        const double fv = v - static_cast<double>(j);
        const double* p00 = table->data() + (i * g + j) * k;
        const double* p01 = table->data() + (i * g + j + 1) * k;
        const double* p10 = table->data() + ((i + 1) * g + j) * k;
        const double* p11 = table->data() + ((i + 1) * g + j + 1) * k;
        double total = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          out[c] = (1 - fu) * (1 - fv) * p00[c] + (1 - fu) * fv * p01[c] +
                   fu * (1 - fv) * p10[c] + fu * fv * p11[c];
          total += out[c];
        }
        for (std::size_t c = 0; c < k; ++c) out[c] /= total;
      });
}

PosteriorOracle estimate_posterior_grid(const LabeledDataset& data,
                                        const TwoMoonsTask& task,
                                        std::size_t mc_samples, std::uint64_t seed) {
  task.validate();
  if (task.noise_sigma <= 0.0) {
    throw std::invalid_argument(
        "estimate_posterior_grid: noise_sigma must be > 0; use moon membership for "
        "noiseless data");
  }
  const auto exact = kernel_posterior(task, mc_samples, seed);
  return tabulate_on_grid(exact, bounding_box(data, 3.0 * task.noise_sigma), task.n_grid);
}

ShiftTransform ShiftTransform::identity() { return {}; }

ShiftTransform ShiftTransform::shear(double factor) {
  return {ShiftKind::shear, {1.0, factor, 0.0, 1.0}, {0.0, 0.0}};
}

ShiftTransform ShiftTransform::rotation(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return {ShiftKind::rotation, {c, -s, s, c}, {0.0, 0.0}};
}

ShiftTransform ShiftTransform::translation(Vec2 t) {
  return {ShiftKind::translation, {1.0, 0.0, 0.0, 1.0}, t};
}

Vec2 ShiftTransform::apply(Vec2 x) const {
  return {matrix[0] * x[0] + matrix[1] * x[1] + offset[0],
          matrix[2] * x[0] + matrix[3] * x[1] + offset[1]};
}

std::string ShiftTransform::name() const {
  switch (kind) {
    case ShiftKind::identity: return "identity";
    case ShiftKind::shear: return "shear";
    case ShiftKind::rotation: return "rotation";
    case ShiftKind::translation: return "translation";
  }
  return "unknown";
}

LabeledDataset apply_shift(const LabeledDataset& data, const ShiftTransform& shift) {
  if (data.dim != 2) {
    throw std::invalid_argument("apply_shift: transforms are defined for 2-D features");
  }
  LabeledDataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec2 moved = shift.apply({data.features[2 * i], data.features[2 * i + 1]});
    out.features[2 * i] = moved[0];
    out.features[2 * i + 1] = moved[1];
  }
  out.eta_true.clear();
  return out;
}

}  // namespace selgap
