#include "selgap/losspred.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "selgap/csv.hpp"
#include "selgap/decomposition.hpp"

namespace selgap {

double sep(std::span<const double> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("sep: empty probability vector");
  return 1.0 - *std::max_element(probabilities.begin(), probabilities.end());
}

const char* to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::prediction_only: return "prediction_only";
    case FeatureMode::input_aware: return "input_aware";
    case FeatureMode::representation_aware: return "representation_aware";
  }
  return "unknown";
}

FeatureMode feature_mode_from_string(const std::string& name) {
  for (auto mode : {FeatureMode::prediction_only, FeatureMode::input_aware,
                    FeatureMode::representation_aware}) {
    if (name == to_string(mode)) return mode;
  }
  throw std::invalid_argument("unknown feature mode: " + name);
}

std::vector<double> loss_features(const Predictor& predictor, std::span<const double> x,
                                  FeatureMode mode) {
  std::vector<double> phi{sep(predictor.probabilities(x))};
  if (mode == FeatureMode::prediction_only) return phi;
  phi.insert(phi.end(), x.begin(), x.end());
  if (mode == FeatureMode::input_aware) return phi;

  if (!predictor.is_ensemble()) {
    const auto h = predictor.model().hidden_representation(x);
    phi.insert(phi.end(), h.begin(), h.end());
    return phi;
  }
  const auto& members = predictor.ensemble().members();
  std::vector<double> mean;
  for (const auto& m : members) {
    const auto h = m.hidden_representation(x);
    if (mean.empty()) mean.assign(h.size(), 0.0);
    for (std::size_t k = 0; k < h.size(); ++k) mean[k] += h[k] / static_cast<double>(members.size());
  }
  phi.insert(phi.end(), mean.begin(), mean.end());
  return phi;
}

LossFeatures build_loss_features(const Predictor& predictor, const LabeledDataset& data,
                                 FeatureMode mode) {
  LossFeatures out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.x(i);
    const auto phi = loss_features(predictor, x, mode);
    if (i == 0) out.dim = phi.size();
    out.values.insert(out.values.end(), phi.begin(), phi.end());
    out.sep.push_back(phi.front());
    out.losses.push_back(predictor.label(x) == data.labels[i] ? 0.0 : 1.0);
  }
  return out;
}

namespace {

std::vector<std::size_t> regressor_layers(std::size_t dim, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

double clamped_output(const Network& net, std::span<const double> w, std::span<const double> phi) {
  double out = 0.0;
  net.forward(w, phi, {&out, 1});
  return std::clamp(out, 0.0, 1.0);
}

SupervisedView regression_view(const LossFeatures& f) {
  SupervisedView view;
  view.dim = f.dim;
  view.inputs = f.values;
  view.targets = f.losses;
  return view;
}

std::vector<double> predictions(const Network& net, std::span<const double> w, const LossFeatures& f) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    out[i] = clamped_output(net, w, std::span<const double>(f.values).subspan(i * f.dim, f.dim));
  }
  return out;
}

void check_lengths(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || b != c) throw std::invalid_argument("advantage: length mismatch");
  if (a == 0) throw std::invalid_argument("advantage: empty input");
}

}  // namespace

LossPredictor::LossPredictor(FeatureMode mode, std::vector<std::size_t> layer_sizes,
                             std::vector<double> weights)
    : mode_(mode),
      net_(std::move(layer_sizes), OutputHead::linear_squared_error),
      weights_(std::move(weights)) {
  if (net_.output_dim() != 1) throw std::invalid_argument("loss predictor must have one output");
  if (weights_.size() != net_.parameter_count()) {
    throw std::invalid_argument("loss predictor weight count mismatch");
  }
}

double LossPredictor::predict(std::span<const double> features) const {
  if (features.size() != net_.input_dim()) {
    throw std::invalid_argument("loss predictor feature dimension mismatch");
  }
  return clamped_output(net_, weights_, features);
}

std::vector<double> LossPredictor::predict_all(const LossFeatures& features) const {
  if (features.dim != net_.input_dim()) {
    throw std::invalid_argument("loss predictor feature dimension mismatch");
  }
  return predictions(net_, weights_, features);
}

LossPredictor train_loss_predictor(const LossFeatures& features, FeatureMode mode,
                                   const LossPredictorConfig& config) {
  if (features.size() == 0) throw std::invalid_argument("train_loss_predictor: no rows");
  auto sizes = regressor_layers(features.dim, config.hidden_sizes);
  const Network net(sizes, OutputHead::linear_squared_error);
  auto fit = fit_network(net, regression_view(features), config.train);
  return LossPredictor(mode, std::move(sizes), std::move(fit.weights));
}

double advantage(std::span<const double> lp_values, std::span<const double> sep_values,
                 std::span<const double> losses) {
  check_lengths(lp_values.size(), sep_values.size(), losses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double a = losses[i] - sep_values[i];
    const double b = losses[i] - lp_values[i];
    total += a * a - b * b;
  }
  return total / static_cast<double>(losses.size());
}

double advantage_standard_error(std::span<const double> lp_values,
                                std::span<const double> sep_values,
                                std::span<const double> losses) {
  check_lengths(lp_values.size(), sep_values.size(), losses.size());
  const std::size_t n = losses.size();
  if (n < 2) return 0.0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = losses[i] - sep_values[i];
    const double b = losses[i] - lp_values[i];
    d[i] = a * a - b * b;
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

void WeightClass::add(std::string name, std::vector<double> values) {
  if (values.size() != n_) throw std::invalid_argument("weight function length mismatch");
  for (double v : values) {
    if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("weight function outside [-1, 1]");
  }
  members_.push_back(std::move(values));
  names_.push_back(std::move(name));
}

void WeightClass::add_constant(double value) {
  add("const_" + format_real(value), std::vector<double>(n_, value));
}

void WeightClass::add_feature_quantile_bins(std::span<const double> features, std::size_t dim,
                                            std::size_t bins) {
  if (dim == 0 || features.size() != n_ * dim) {
    throw std::invalid_argument("feature matrix does not match the weight class sample");
  }
  if (bins == 0) throw std::invalid_argument("need at least one quantile bin");
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<std::size_t> order(n_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return features[a * dim + d] < features[b * dim + d]; });
    std::vector<std::vector<double>> ind(bins, std::vector<double>(n_, 0.0));
    for (std::size_t rank = 0; rank < n_; ++rank) ind[rank * bins / n_][order[rank]] = 1.0;
    for (std::size_t b = 0; b < bins; ++b) {
      add("x" + std::to_string(d) + "_q" + std::to_string(b), std::move(ind[b]));
    }
  }
}

void WeightClass::add_difference_indicator(std::span<const double> scores,
                                           std::span<const double> eta_h, double coverage) {
  if (scores.size() != n_ || eta_h.size() != n_) {
    throw std::invalid_argument("difference indicator length mismatch");
  }
  std::vector<double> values(n_, 0.0);
  for (auto i : top_fraction(eta_h, coverage)) values[i] += 1.0;
  for (auto i : top_fraction(scores, coverage)) values[i] -= 1.0;
  add("delta_" + format_real(coverage), std::move(values));
}

void WeightClass::add_affine(std::size_t i, std::size_t j, double a, double b) {
  if (i >= members_.size() || j >= members_.size()) throw std::out_of_range("no such weight member");
  if (std::abs(a) + std::abs(b) > 1.0) throw std::invalid_argument("affine weights need |a| + |b| <= 1");
  std::vector<double> values(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    values[k] = std::clamp(a * members_[i][k] + b * members_[j][k], -1.0, 1.0);
  }
  add(format_real(a) + "*" + names_[i] + "+" + format_real(b) + "*" + names_[j], std::move(values));
}

WeightClass default_weight_class(std::span<const double> features, std::size_t dim,
                                 std::span<const double> scores, std::span<const double> eta_h,
                                 std::span<const double> coverage_grid, std::size_t bins) {
  WeightClass c(scores.size());
  c.add_feature_quantile_bins(features, dim, bins);
  for (double cov : coverage_grid) c.add_difference_indicator(scores, eta_h, cov);
  return c;
}

double mce(std::span<const double> residuals, const WeightClass& weights) {
  if (weights.empty()) throw std::invalid_argument("mce: empty weight class");
  if (residuals.size() != weights.sample_size()) throw std::invalid_argument("mce: length mismatch");
  if (residuals.empty()) throw std::invalid_argument("mce: no residuals");
  double best = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    const auto& c = weights.member(m);
    double total = 0.0;
    for (std::size_t i = 0; i < residuals.size(); ++i) total += residuals[i] * c[i];
    best = std::max(best, std::abs(total / static_cast<double>(residuals.size())));
  }
  return best;
}

std::vector<CorollaryRow> corollary_check(std::span<const double> eta_h,
                                          std::span<const double> scores,
                                          std::span<const double> confidences,
                                          std::span<const double> losses,
                                          std::span<const double> coverage_grid) {
  const std::size_t n = eta_h.size();
  if (scores.size() != n || confidences.size() != n || losses.size() != n) {
    throw std::invalid_argument("corollary_check: length mismatch");
  }
  std::vector<double> lp_star(n), sep_values(n);
  for (std::size_t i = 0; i < n; ++i) {
    lp_star[i] = 1.0 - eta_h[i];
    sep_values[i] = 1.0 - confidences[i];
  }
  const double adv = advantage(lp_star, sep_values, losses);
  const double se = advantage_standard_error(lp_star, sep_values, losses);
  const double bound = std::sqrt(2.0 * std::max(0.0, adv + 2.0 * se));

  std::vector<CorollaryRow> rows;
  for (double c : coverage_grid) {
    CorollaryRow row;
    row.coverage = c;
    row.eps_rank = eps_rank(eta_h, scores, c);
    row.adv_star = adv;
    row.adv_star_se = se;
    row.bound = bound;
    row.holds = row.eps_rank <= bound;
    rows.push_back(row);
  }
  return rows;
}

std::vector<CorollaryRow> corollary_check(const LabeledDataset& data, const SelectivePair& pair,
                                          std::span<const double> coverage_grid) {
  pair.validate();
  const auto predicted = predict_labels(pair.predictor, data);
  const auto eta_h = correctness_posteriors(data, predicted);
  const auto scored = score_dataset(pair, data);
  const auto scores = scores_of(scored);
  const double t = pair.predictor.is_ensemble() ? 1.0 : pair.score.temperature;
  std::vector<double> confidences(data.size()), losses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    confidences[i] = max_probability(pair.predictor.probabilities(data.x(i), t));
    losses[i] = scored[i].correct ? 0.0 : 1.0;
  }
  return corollary_check(eta_h, scores, confidences, losses, coverage_grid);
}

std::vector<AdvantageTracePoint> advantage_trace(const LossFeatures& holdout,
                                                 const LossFeatures& test, FeatureMode mode,
                                                 const LossPredictorConfig& config) {
  (void)mode;
  if (holdout.dim != test.dim) throw std::invalid_argument("advantage_trace: feature dims differ");
  const Network net(regressor_layers(holdout.dim, config.hidden_sizes),
                    OutputHead::linear_squared_error);
  std::vector<AdvantageTracePoint> trace;
  fit_network(net, regression_view(holdout), config.train,
              [&](std::size_t epoch, std::span<const double> w) {
                const auto lp = predictions(net, w, test);
                AdvantageTracePoint p;
                p.epoch = epoch;
                p.adv_test = advantage(lp, test.sep, test.losses);
                p.adv_delta = trace.empty() ? 0.0 : p.adv_test - trace.front().adv_test;
                trace.push_back(p);
              });
  return trace;
}

void write_advantage_csv(std::span<const AdvantageTracePoint> trace, std::ostream& out) {
  out << "epoch,adv_test,adv_delta\n";
  for (const auto& p : trace) {
    out << p.epoch << ',' << format_real(p.adv_test) << ',' << format_real(p.adv_delta) << '\n';
  }
}

}  // namespace selgap
