#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace selgap {

enum class OutputHead {
  softmax_cross_entropy,  // logits -> softmax, mean cross-entropy on labels
  linear_squared_error,   // scalar output, mean squared error on targets
};

/// Rows of inputs with either class labels or real regression targets.
struct SupervisedView {
  std::size_t dim = 0;
  std::span<const double> inputs;   // row-major
  std::span<const int> labels;      // softmax head
  std::span<const double> targets;  // squared-error head

  std::size_t size() const { return dim == 0 ? 0 : inputs.size() / dim; }
  std::span<const double> row(std::size_t i) const {
    return inputs.subspan(i * dim, dim);
  }
};

/// Fully connected ReLU network evaluated over an external flat weight
/// vector. Layer l stores its weight matrix (out x in, row-major) followed by
/// its bias vector.
class Network {
 public:
  Network(std::vector<std::size_t> layer_sizes, OutputHead head);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  OutputHead head() const { return head_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t parameter_count() const { return param_count_; }

  /// He-style uniform fan-in initialization, biases zero.
  std::vector<double> initialize(std::uint64_t seed) const;

  /// Raw outputs (logits or regression value).
  void forward(std::span<const double> weights, std::span<const double> x,
               std::span<double> out) const;

  /// Activations of the last hidden layer (empty for a single-layer net).
  std::vector<double> last_hidden(std::span<const double> weights,
                                  std::span<const double> x) const;

  /// Mean loss over the rows in `batch` (indices into `data`); the gradient
  /// of that mean is written to `grad` (overwritten, not accumulated).
  double loss_and_gradient(std::span<const double> weights,
                           const SupervisedView& data,
                           std::span<const std::size_t> batch,
                           std::span<double> grad) const;

  double mean_loss(std::span<const double> weights,
                   const SupervisedView& data) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;  // start of each layer's block
  OutputHead head_;
  std::size_t param_count_ = 0;
  std::size_t widest_ = 0;
};

struct TrainConfig;

struct FitResult {
  std::vector<double> weights;
  std::vector<double> loss_trace;  // full-data mean loss after each epoch
};

/// Minibatch SGD with momentum and L2 weight decay. Batches are reshuffled
/// each epoch from a per-epoch derived seed. Throws std::runtime_error naming
/// the epoch when the loss becomes non-finite.
using EpochCallback =
    std::function<void(std::size_t epoch, std::span<const double> weights)>;

FitResult fit_network(const Network& net, const SupervisedView& data,
                      const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

}  // namespace selgap
