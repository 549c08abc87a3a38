#include "selgap/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "selgap/csv.hpp"
#include "selgap/models.hpp"

namespace selgap {

Calibrator Calibrator::temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("temperature must be positive");
  Calibrator c;
  c.kind_ = CalibratorKind::temperature;
  c.temperature_ = t;
  return c;
}

Calibrator Calibrator::isotonic(std::vector<double> knots_x, std::vector<double> knots_y) {
  if (knots_x.empty() || knots_x.size() != knots_y.size()) {
    throw std::invalid_argument("isotonic: knot arrays must be nonempty and equal length");
  }
  for (std::size_t i = 1; i < knots_x.size(); ++i) {
    if (!(knots_x[i] > knots_x[i - 1])) throw std::invalid_argument("isotonic: knots must increase");
    if (knots_y[i] < knots_y[i - 1]) throw std::invalid_argument("isotonic: map must be nondecreasing");
  }
  Calibrator c;
  c.kind_ = CalibratorKind::isotonic;
  c.xs_ = std::move(knots_x);
  c.ys_ = std::move(knots_y);
  return c;
}

Calibrator Calibrator::histogram(std::vector<double> edges, std::vector<double> values) {
  if (values.empty() || edges.size() != values.size() + 1) {
    throw std::invalid_argument("histogram: need one more edge than values");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("histogram: edges must increase");
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("histogram: values must lie in [0,1]");
  }
  Calibrator c;
  c.kind_ = CalibratorKind::histogram;
  c.xs_ = std::move(edges);
  c.ys_ = std::move(values);
  return c;
}

double Calibrator::apply(double score) const {
  switch (kind_) {
    case CalibratorKind::isotonic: {
      if (score <= xs_.front()) return ys_.front();
      if (score >= xs_.back()) return ys_.back();
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(xs_.begin(), xs_.end(), score) - xs_.begin());
      const std::size_t lo = hi - 1;
      const double t = (score - xs_[lo]) / (xs_[hi] - xs_[lo]);
      return ys_[lo] + t * (ys_[hi] - ys_[lo]);
    }
    case CalibratorKind::histogram: {
      const auto inner_begin = xs_.begin() + 1;
      const auto inner_end = xs_.end() - 1;
      const auto bin = static_cast<std::size_t>(std::lower_bound(inner_begin, inner_end, score) - inner_begin);
      return ys_[bin];
    }
    case CalibratorKind::temperature:
      break;
  }
  throw std::logic_error("temperature calibrators act on logits; use apply_logits");
}

std::vector<double> Calibrator::apply_logits(std::span<const double> logits) const {
  if (kind_ != CalibratorKind::temperature) {
    throw std::logic_error("apply_logits requires a temperature calibrator");
  }
  return apply_temperature(logits, temperature_);
}

double tempered_nll(std::span<const double> logit_rows, std::size_t num_classes,
                    std::span<const int> labels, double temperature) {
  if (num_classes == 0 || logit_rows.size() != labels.size() * num_classes) {
    throw std::invalid_argument("tempered_nll: logit rows do not match labels");
  }
  if (labels.empty()) throw std::invalid_argument("tempered_nll: no rows");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = logit_rows.subspan(i * num_classes, num_classes);
    double top = row[0];
    for (double z : row) top = std::max(top, z);
    double sum = 0.0;
    for (double z : row) sum += std::exp((z - top) / temperature);
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= num_classes) throw std::out_of_range("tempered_nll: label out of range");
    total += std::log(sum) - (row[y] - top) / temperature;
  }
  return total / static_cast<double>(labels.size());
}

TemperatureFit fit_temperature(std::span<const double> logit_rows, std::size_t num_classes,
                               std::span<const int> labels, TemperatureRange range) {
  if (labels.empty()) throw std::invalid_argument("fit_temperature: no validation rows");
  if (!(range.log_lo < range.log_hi)) throw std::invalid_argument("fit_temperature: empty range");

  TemperatureFit fit;
  bool identical = true;
  for (std::size_t i = 1; i < labels.size() && identical; ++i) {
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (logit_rows[i * num_classes + k] != logit_rows[k]) {
        identical = false;
        break;
      }
    }
  }
  if (identical) {
    fit.warning = "degenerate logits: all rows identical, keeping T = 1";
    return fit;
  }

  const auto objective = [&](double log_t) {
    return tempered_nll(logit_rows, num_classes, labels, std::exp(log_t));
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = range.log_lo, b = range.log_hi;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  while (b - a > 1e-7) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = objective(x2);
    }
  }
  double best = 0.5 * (a + b);
  const double edge_tol = 1e-5;
  if (best - range.log_lo < edge_tol || range.log_hi - best < edge_tol) {
    fit.at_boundary = true;
    best = best - range.log_lo < edge_tol ? range.log_lo : range.log_hi;
    fit.warning = "temperature optimum lies on the search boundary";
  }
  fit.calibrator = Calibrator::temperature(std::exp(best));
  return fit;
}

std::vector<double> apply_temperature(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  return softmax(logits, temperature);
}

double competitor_mass(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw std::invalid_argument("competitor_mass: empty logits");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const auto top = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  double mass = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j != top) mass += std::exp((logits[j] - logits[top]) / temperature);
  }
  return mass;
}

double tempered_max_probability(std::span<const double> logits, double temperature) {
  return 1.0 / (1.0 + competitor_mass(logits, temperature));
}

SwapReport find_swap_temperatures(std::span<const double> z1, std::span<const double> z2,
                                  std::span<const double> t_grid) {
  if (z1.size() != z2.size()) throw std::invalid_argument("find_swap_temperatures: size mismatch");
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw std::invalid_argument("find_swap_temperatures: grid must be sorted");
  }
  const auto diff = [&](double t) { return competitor_mass(z1, t) - competitor_mass(z2, t); };
  const auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };

  SwapReport report;
  report.degenerate = !t_grid.empty();
  int last_sign = 0;
  double last_t = 0.0;
  for (double t : t_grid) {
    const int s = sign(diff(t));
    if (s == 0) continue;
    report.degenerate = false;
    if (last_sign != 0 && s != last_sign) {
      double lo = last_t, hi = t;
      while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (sign(diff(mid)) == last_sign) lo = mid;
        else hi = mid;
      }
      report.crossings.push_back({lo, hi});
    }
    last_sign = s;
    last_t = t;
  }
  return report;
}

namespace {

struct Block {
  double sum = 0.0;
  double weight = 0.0;
  std::size_t first = 0;  // index into the sorted group list
  std::size_t last = 0;
  double mean() const { return sum / weight; }
};

struct Groups {
  std::vector<double> values;   // distinct scores ascending
  std::vector<double> fitted;   // level per distinct score
  std::vector<std::size_t> of;  // group of each input
};

Groups pav_groups(std::span<const double> scores, std::span<const double> targets) {
  if (scores.size() != targets.size()) throw std::invalid_argument("isotonic: length mismatch");
  if (scores.empty()) throw std::invalid_argument("isotonic: empty input");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  Groups g;
  g.of.resize(scores.size());
  std::vector<Block> stack;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    if (g.values.empty() || scores[i] != g.values.back()) {
      g.values.push_back(scores[i]);
      const std::size_t id = g.values.size() - 1;
      stack.push_back({0.0, 0.0, id, id});
    }
    g.of[i] = g.values.size() - 1;
    stack.back().sum += targets[i];
    stack.back().weight += 1.0;
    // Only merge once the tie group is complete.
    const bool group_done = pos + 1 == order.size() || scores[order[pos + 1]] != scores[i];
    if (!group_done) continue;
    while (stack.size() > 1 && stack[stack.size() - 2].mean() >= stack.back().mean()) {
      Block top = stack.back();
      stack.pop_back();
      stack.back().sum += top.sum;
      stack.back().weight += top.weight;
      stack.back().last = top.last;
    }
  }
  g.fitted.resize(g.values.size());
  for (const auto& b : stack) {
    for (std::size_t k = b.first; k <= b.last; ++k) g.fitted[k] = b.mean();
  }
  return g;
}

}  // namespace

std::vector<double> isotonic_fit_values(std::span<const double> scores,
                                        std::span<const double> targets) {
  const auto g = pav_groups(scores, targets);
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = g.fitted[g.of[i]];
  return out;
}

Calibrator fit_isotonic(std::span<const double> scores, std::span<const double> correct) {
  auto g = pav_groups(scores, correct);
  return Calibrator::isotonic(std::move(g.values), std::move(g.fitted));
}

Calibrator fit_histogram(std::span<const double> scores, std::span<const double> correct,
                         std::size_t n_bins) {
  if (n_bins == 0) throw std::invalid_argument("fit_histogram: need at least one bin");
  if (scores.size() != correct.size()) throw std::invalid_argument("fit_histogram: length mismatch");
  const auto b = static_cast<double>(n_bins);
  std::vector<double> edges(n_bins + 1), sums(n_bins, 0.0), counts(n_bins, 0.0);
  for (std::size_t i = 0; i <= n_bins; ++i) edges[i] = static_cast<double>(i) / b;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], 0.0, 1.0);
    const auto bin = std::min<std::size_t>(
        n_bins - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(s * b) - 1.0)));
    sums[bin] += correct[i];
    counts[bin] += 1.0;
  }
  std::vector<double> values(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    values[k] = counts[k] > 0.0 ? sums[k] / counts[k] : 0.5 * (edges[k] + edges[k + 1]);
  }
  return Calibrator::histogram(std::move(edges), std::move(values));
}

ReliabilityReport ece(std::span<const double> confidences, std::span<const double> correct,
                      std::size_t n_bins) {
  if (n_bins == 0) throw std::invalid_argument("ece: need at least one bin");
  if (confidences.size() != correct.size()) throw std::invalid_argument("ece: length mismatch");
  ReliabilityReport report;
  report.n_bins = n_bins;
  const auto b = static_cast<double>(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0), hit_sum(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("ece: confidence outside [0,1]");
    const auto bin = std::min<std::size_t>(
        n_bins - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(c * b) - 1.0)));
    conf_sum[bin] += c;
    hit_sum[bin] += correct[i];
    ++counts[bin];
  }
  const auto n = static_cast<double>(confidences.size());
  for (std::size_t k = 0; k < n_bins; ++k) {
    ReliabilityBin bin;
    bin.lo = static_cast<double>(k) / b;
    bin.hi = static_cast<double>(k + 1) / b;
    bin.count = counts[k];
    if (counts[k] > 0) {
      const auto m = static_cast<double>(counts[k]);
      bin.mean_confidence = conf_sum[k] / m;
      bin.accuracy = hit_sum[k] / m;
      report.ece += (m / n) * std::abs(bin.accuracy - bin.mean_confidence);
    }
    report.bins.push_back(bin);
  }
  return report;
}

void write_reliability_csv(const ReliabilityReport& report, std::ostream& out) {
  out << "bin_lo,bin_hi,count,mean_conf,accuracy\n";
  for (const auto& b : report.bins) {
    out << format_real(b.lo) << ',' << format_real(b.hi) << ',' << b.count << ','
        << format_real(b.mean_confidence) << ',' << format_real(b.accuracy) << '\n';
  }
  out << "ece," << format_real(report.ece) << '\n';
}

}  // namespace selgap
