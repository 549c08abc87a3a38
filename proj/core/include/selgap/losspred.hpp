#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "selgap/dataset.hpp"
#include "selgap/models.hpp"
#include "selgap/network.hpp"
#include "selgap/scoring.hpp"

namespace selgap {

/// Self-entropy predictor under 0-1 loss: 1 - max_j p_j.
double sep(std::span<const double> probabilities);

enum class FeatureMode { prediction_only, input_aware, representation_aware };

const char* to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& name);

/// phi(x, h): [SEP] for prediction_only, [SEP, x] for input_aware and
/// [SEP, x, last hidden activations] for representation_aware. Ensembles
/// contribute the member-mean representation.
std::vector<double> loss_features(const Predictor& predictor,
                                  std::span<const double> x, FeatureMode mode);

struct LossFeatures {
  std::size_t dim = 0;
  std::vector<double> values;  // row-major
  std::vector<double> losses;  // 0/1
  std::vector<double> sep;

  std::size_t size() const { return losses.size(); }
};

LossFeatures build_loss_features(const Predictor& predictor,
                                 const LabeledDataset& data, FeatureMode mode);

/// Small MLP regressor on 0/1 loss, output clamped to [0, 1].
class LossPredictor {
 public:
  LossPredictor(FeatureMode mode, std::vector<std::size_t> layer_sizes,
                std::vector<double> weights);

  FeatureMode mode() const { return mode_; }
  std::size_t feature_dim() const { return net_.input_dim(); }
  std::span<const double> weights() const { return weights_; }

  double predict(std::span<const double> features) const;
  std::vector<double> predict_all(const LossFeatures& features) const;

 private:
  FeatureMode mode_;
  Network net_;
  std::vector<double> weights_;
};

struct LossPredictorConfig {
  std::vector<std::size_t> hidden_sizes{32, 16};
  TrainConfig train{0.02, 100, 32, 1e-4, 0.9, 0};
};

/// Trains on held-out rows that must be disjoint from the base model's
/// training data; the caller owns that split.
LossPredictor train_loss_predictor(const LossFeatures& features,
                                   FeatureMode mode,
                                   const LossPredictorConfig& config);

/// Adv(LP) = mean (l - SEP)^2 - mean (l - LP)^2.
double advantage(std::span<const double> lp_values,
                 std::span<const double> sep_values,
                 std::span<const double> losses);

/// Standard error of the advantage (per-sample differences).
double advantage_standard_error(std::span<const double> lp_values,
                                std::span<const double> sep_values,
                                std::span<const double> losses);

/// Finite class of bounded weight functions materialized over one sample.
class WeightClass {
 public:
  explicit WeightClass(std::size_t n) : n_(n) {}

  std::size_t sample_size() const { return n_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<double>& member(std::size_t i) const { return members_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  /// Throws unless every value lies in [-1, 1] and the length matches.
  void add(std::string name, std::vector<double> values);
  void add_constant(double value);
  /// Indicators of `bins` equal-mass quantile bins along each feature column.
  void add_feature_quantile_bins(std::span<const double> features,
                                 std::size_t dim, std::size_t bins);
  /// delta_c = 1[oracle set] - 1[score set] at coverage c.
  void add_difference_indicator(std::span<const double> scores,
                                std::span<const double> eta_h, double coverage);
  /// a * member(i) + b * member(j); requires |a| + |b| <= 1.
  void add_affine(std::size_t i, std::size_t j, double a, double b);

 private:
  std::size_t n_;
  std::vector<std::vector<double>> members_;
  std::vector<std::string> names_;
};

/// Default class: `bins` equal-mass quantile indicators per feature column
/// plus a difference indicator at every grid coverage.
WeightClass default_weight_class(std::span<const double> features, std::size_t dim,
                                 std::span<const double> scores,
                                 std::span<const double> eta_h,
                                 std::span<const double> coverage_grid,
                                 std::size_t bins = 16);

/// max over members of |mean(residual * c)|. Throws for an empty class.
double mce(std::span<const double> residuals, const WeightClass& weights);

struct CorollaryRow {
  double coverage = 0.0;
  double eps_rank = 0.0;
  double adv_star = 0.0;
  double adv_star_se = 0.0;
  double bound = 0.0;  // sqrt(2 * max(0, adv_star + 2 se))
  bool holds = false;
};

/// Adv* uses the squared-error optimal predictor LP* = 1 - eta_h against the
/// self-estimate SEP = 1 - confidence. `scores` define the acceptance sets,
/// `confidences` are the [0, 1]-valued self-estimates of correctness and
/// `losses` are realized 0/1 losses.
std::vector<CorollaryRow> corollary_check(std::span<const double> eta_h,
                                          std::span<const double> scores,
                                          std::span<const double> confidences,
                                          std::span<const double> losses,
                                          std::span<const double> coverage_grid);

std::vector<CorollaryRow> corollary_check(const LabeledDataset& data,
                                          const SelectivePair& pair,
                                          std::span<const double> coverage_grid);

struct AdvantageTracePoint {
  std::size_t epoch = 0;
  double adv_test = 0.0;
  double adv_delta = 0.0;  // relative to epoch 1
};

/// Trains the loss predictor once and records the test advantage of the
/// weights reached after each epoch.
std::vector<AdvantageTracePoint> advantage_trace(const LossFeatures& holdout,
                                                 const LossFeatures& test,
                                                 FeatureMode mode,
                                                 const LossPredictorConfig& config);

// CSV layout: epoch,adv_test,adv_delta
void write_advantage_csv(std::span<const AdvantageTracePoint> trace,
                         std::ostream& out);

}  // namespace selgap
