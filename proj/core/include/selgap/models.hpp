#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "selgap/dataset.hpp"
#include "selgap/network.hpp"

namespace selgap {

enum class ModelKind { logistic, mlp };
enum class Activation { relu };

struct ModelSpec {
  ModelKind kind = ModelKind::logistic;
  std::vector<std::size_t> hidden_sizes;
  Activation activation = Activation::relu;
  std::size_t num_classes = 2;
  std::size_t input_dim = 2;

  static ModelSpec logistic(std::size_t input_dim, std::size_t num_classes);
  static ModelSpec mlp(std::size_t input_dim, std::vector<std::size_t> hidden,
                       std::size_t num_classes);

  void validate() const;
  std::vector<std::size_t> layer_sizes() const;
  std::size_t weight_count() const;
  std::string describe() const;  // e.g. "logistic" or "mlp[32,32]"

  bool operator==(const ModelSpec&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits, double temperature);

class TrainedModel {
 public:
  TrainedModel(ModelSpec spec, std::vector<double> weights,
               std::vector<double> loss_trace, std::uint64_t seed);

  /// Model with hand-set weights and no training history.
  static TrainedModel from_weights(ModelSpec spec, std::vector<double> weights);

  const ModelSpec& spec() const { return spec_; }
  std::span<const double> weights() const { return weights_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }
  std::uint64_t seed() const { return seed_; }
  const Network& network() const { return net_; }

  std::vector<double> logits(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
  std::vector<double> hidden_representation(std::span<const double> x) const;

  /// Versioned text format: one JSON header line, then one weight per line.
  void save(std::ostream& out) const;
  static TrainedModel load(std::istream& in);

 private:
  ModelSpec spec_;
  Network net_;
  std::vector<double> weights_;
  std::vector<double> loss_trace_;
  std::uint64_t seed_ = 0;
};

SupervisedView classification_view(const LabeledDataset& data);

TrainedModel train(const ModelSpec& spec, const TrainConfig& config,
                   const LabeledDataset& data);

double mean_cross_entropy(const TrainedModel& model, const LabeledDataset& data);
double accuracy(const TrainedModel& model, const LabeledDataset& data);

/// Members share a spec and were trained from distinct seeds. The ensemble
/// prediction is the argmax of the mean member probabilities.
class Ensemble {
 public:
  explicit Ensemble(std::vector<TrainedModel> members);

  const std::vector<TrainedModel>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  const ModelSpec& spec() const { return members_.front().spec(); }

  std::vector<double> predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
  /// members x classes, row-major.
  std::vector<double> member_probabilities(std::span<const double> x) const;

 private:
  std::vector<TrainedModel> members_;
};

/// Members use seeds seed, seed+1, ..., seed+m-1 and train concurrently.
Ensemble train_ensemble(const ModelSpec& spec, const TrainConfig& config,
                        const LabeledDataset& data, std::size_t m);

double accuracy(const Ensemble& ensemble, const LabeledDataset& data);

/// max(0, training loss of `model` on `data` - reference_loss).
double optimization_slack(const TrainedModel& model, const LabeledDataset& data,
                          double reference_loss);

/// Long-horizon full-batch gradient descent on the unregularized mean
/// cross-entropy of a logistic model; a near-minimal loss for the convex case.
double reference_logistic_loss(const LabeledDataset& data,
                               std::size_t iterations = 5000);

}  // namespace selgap
