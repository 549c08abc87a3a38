#include "selgap/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "selgap/models.hpp"
#include "selgap/random.hpp"

namespace selgap {

Network::Network(std::vector<std::size_t> layer_sizes, OutputHead head)
    : sizes_(std::move(layer_sizes)), head_(head) {
  if (sizes_.size() < 2) throw std::invalid_argument("network: need input and output layers");
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("network: layer sizes must be positive");
  }
  if (head_ == OutputHead::linear_squared_error && sizes_.back() != 1) {
    throw std::invalid_argument("network: squared-error head has one output");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  widest_ = *std::max_element(sizes_.begin(), sizes_.end());
}

std::vector<double> Network::initialize(std::uint64_t seed) const {
  std::vector<double> w(param_count_, 0.0);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t fan_in = sizes_[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> unif(-bound, bound);
    const std::size_t count = sizes_[l + 1] * fan_in;
    for (std::size_t i = 0; i < count; ++i) w[offsets_[l] + i] = unif(rng);
  }
  return w;
}

namespace {

// One layer: out = W a + b.
void affine(const double* w, std::size_t in, std::size_t out, const double* a,
            double* z) {
  const double* bias = w + in * out;
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = w + o * in;
    double s = bias[o];
    for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
    z[o] = s;
  }
}

}  // namespace

void Network::forward(std::span<const double> weights, std::span<const double> x,
                      std::span<double> out) const {
  if (weights.size() != param_count_) throw std::invalid_argument("network: weight count mismatch");
  if (x.size() != input_dim()) throw std::invalid_argument("network: input dimension mismatch");
  if (out.size() != output_dim()) throw std::invalid_argument("network: output size mismatch");
  std::vector<double> a(x.begin(), x.end()), z(widest_);
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    affine(weights.data() + offsets_[l], sizes_[l], sizes_[l + 1], a.data(), z.data());
    a.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(sizes_[l + 1]));
    if (l + 1 < layers) {
      for (double& v : a) v = std::max(0.0, v);
    }
  }
  std::copy(a.begin(), a.end(), out.begin());
}

std::vector<double> Network::last_hidden(std::span<const double> weights,
                                         std::span<const double> x) const {
  if (weights.size() != param_count_) throw std::invalid_argument("network: weight count mismatch");
  if (x.size() != input_dim()) throw std::invalid_argument("network: input dimension mismatch");
  const std::size_t layers = sizes_.size() - 1;
  if (layers < 2) return {};
  std::vector<double> a(x.begin(), x.end()), z(widest_);
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    affine(weights.data() + offsets_[l], sizes_[l], sizes_[l + 1], a.data(), z.data());
    a.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(sizes_[l + 1]));
    for (double& v : a) v = std::max(0.0, v);
  }
  return a;
}

double Network::loss_and_gradient(std::span<const double> weights,
                                  const SupervisedView& data,
                                  std::span<const std::size_t> batch,
                                  std::span<double> grad) const {
  if (weights.size() != param_count_ || grad.size() != param_count_) {
    throw std::invalid_argument("network: weight/gradient size mismatch");
  }
  if (data.dim != input_dim()) throw std::invalid_argument("network: input dimension mismatch");
  if (batch.empty()) throw std::invalid_argument("network: empty batch");
  std::fill(grad.begin(), grad.end(), 0.0);

  const std::size_t layers = sizes_.size() - 1;
  // acts[l] holds the input of layer l (post-activation); acts[layers] the raw output.
  std::vector<std::size_t> act_offset(layers + 2, 0);
  for (std::size_t l = 0; l <= layers; ++l) act_offset[l + 1] = act_offset[l] + sizes_[l];
  std::vector<double> acts(act_offset.back());
  std::vector<double> delta(widest_), prev_delta(widest_);

  double total_loss = 0.0;
  for (std::size_t idx : batch) {
    const auto x = data.row(idx);
    std::copy(x.begin(), x.end(), acts.begin());
    for (std::size_t l = 0; l < layers; ++l) {
      double* out = acts.data() + act_offset[l + 1];
      affine(weights.data() + offsets_[l], sizes_[l], sizes_[l + 1],
             acts.data() + act_offset[l], out);
      if (l + 1 < layers) {
        for (std::size_t o = 0; o < sizes_[l + 1]; ++o) out[o] = std::max(0.0, out[o]);
      }
    }
    const double* y_hat = acts.data() + act_offset[layers];
    const std::size_t k = output_dim();
    if (head_ == OutputHead::softmax_cross_entropy) {
      const int label = data.labels[idx];
      const double mx = *std::max_element(y_hat, y_hat + k);
      double z = 0.0;
      for (std::size_t c = 0; c < k; ++c) z += std::exp(y_hat[c] - mx);
      const double log_z = mx + std::log(z);
      total_loss += log_z - y_hat[label];
      for (std::size_t c = 0; c < k; ++c) {
        delta[c] = std::exp(y_hat[c] - log_z) - (static_cast<int>(c) == label ? 1.0 : 0.0);
      }
    } else {
      const double r = y_hat[0] - data.targets[idx];
      total_loss += r * r;
      delta[0] = 2.0 * r;
    }

    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = sizes_[l], out = sizes_[l + 1];
      const double* a = acts.data() + act_offset[l];
      double* gw = grad.data() + offsets_[l];
      double* gb = gw + in * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* row = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += d * a[i];
        gb[o] += d;
      }
      if (l == 0) break;
      const double* w = weights.data() + offsets_[l];
      for (std::size_t i = 0; i < in; ++i) {
        double s = 0.0;
        if (a[i] > 0.0) {
          for (std::size_t o = 0; o < out; ++o) s += w[o * in + i] * delta[o];
        }
        prev_delta[i] = s;
      }
      std::swap(delta, prev_delta);
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= scale;
  return total_loss * scale;
}

double Network::mean_loss(std::span<const double> weights, const SupervisedView& data) const {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("network: empty data");
  std::vector<double> out(output_dim());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    forward(weights, data.row(i), out);
    if (head_ == OutputHead::softmax_cross_entropy) {
      const double mx = *std::max_element(out.begin(), out.end());
      double z = 0.0;
      for (double v : out) z += std::exp(v - mx);
      total += mx + std::log(z) - out[static_cast<std::size_t>(data.labels[i])];
    } else {
      const double r = out[0] - data.targets[i];
      total += r * r;
    }
  }
  return total / static_cast<double>(n);
}

FitResult fit_network(const Network& net, const SupervisedView& data,
                      const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("fit_network: empty training data");
  if (data.dim != net.input_dim()) {
    throw std::invalid_argument("fit_network: feature dimension does not match the network");
  }

  FitResult result;
  result.weights = net.initialize(config.seed);
  std::vector<double> velocity(result.weights.size(), 0.0);
  std::vector<double> grad(result.weights.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const double loss = net.loss_and_gradient(result.weights, data, batch, grad);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training loss became non-finite at epoch " +
                                 std::to_string(epoch));
      }
      for (std::size_t p = 0; p < grad.size(); ++p) {
        const double g = grad[p] + config.weight_decay * result.weights[p];
        velocity[p] = config.momentum * velocity[p] + g;
        result.weights[p] -= config.learning_rate * velocity[p];
      }
    }
    const double epoch_loss = net.mean_loss(result.weights, data);
    if (!std::isfinite(epoch_loss)) {
      throw std::runtime_error("training loss became non-finite at epoch " +
                               std::to_string(epoch));
    }
    result.loss_trace.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, result.weights);
  }
  return result;
}

}  // namespace selgap
