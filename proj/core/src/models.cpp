#include "selgap/models.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "selgap/csv.hpp"

namespace selgap {

ModelSpec ModelSpec::logistic(std::size_t input_dim, std::size_t num_classes) {
  ModelSpec s;
  s.kind = ModelKind::logistic;
  s.input_dim = input_dim;
  s.num_classes = num_classes;
  s.validate();
  return s;
}

ModelSpec ModelSpec::mlp(std::size_t input_dim, std::vector<std::size_t> hidden,
                         std::size_t num_classes) {
  ModelSpec s;
  s.kind = ModelKind::mlp;
  s.hidden_sizes = std::move(hidden);
  s.input_dim = input_dim;
  s.num_classes = num_classes;
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw std::invalid_argument("model spec: input_dim must be positive");
  if (num_classes < 2) throw std::invalid_argument("model spec: need >= 2 classes");
  if (kind == ModelKind::logistic && !hidden_sizes.empty()) {
    throw std::invalid_argument("model spec: logistic models have no hidden layers");
  }
  if (kind == ModelKind::mlp && hidden_sizes.empty()) {
    throw std::invalid_argument("model spec: an mlp needs at least one hidden layer");
  }
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw std::invalid_argument("model spec: hidden sizes must be positive");
  }
}

std::vector<std::size_t> ModelSpec::layer_sizes() const {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(num_classes);
  return sizes;
}

std::size_t ModelSpec::weight_count() const {
  const auto sizes = layer_sizes();
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) total += sizes[l + 1] * (sizes[l] + 1);
  return total;
}

std::string ModelSpec::describe() const {
  if (kind == ModelKind::logistic) return "logistic";
  std::string s = "mlp[";
  for (std::size_t i = 0; i < hidden_sizes.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(hidden_sizes[i]);
  }
  return s + "]";
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
  if (epochs == 0) throw std::invalid_argument("train config: epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("train config: momentum must lie in [0,1)");
  }
}

std::vector<double> softmax(std::span<const double> logits) { return softmax(logits, 1.0); }

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax: temperature must be > 0");
  std::vector<double> p(logits.begin(), logits.end());
  const double mx = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp((v - mx) / temperature);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

TrainedModel::TrainedModel(ModelSpec spec, std::vector<double> weights,
                           std::vector<double> loss_trace, std::uint64_t seed)
    : spec_(std::move(spec)),
      net_(spec_.layer_sizes(), OutputHead::softmax_cross_entropy),
      weights_(std::move(weights)),
      loss_trace_(std::move(loss_trace)),
      seed_(seed) {
  spec_.validate();
  if (weights_.size() != spec_.weight_count()) {
    throw std::invalid_argument("trained model: weight count does not match the spec");
  }
  for (double v : loss_trace_) {
    if (!std::isfinite(v)) throw std::invalid_argument("trained model: non-finite loss trace");
  }
}

TrainedModel TrainedModel::from_weights(ModelSpec spec, std::vector<double> weights) {
  return TrainedModel(std::move(spec), std::move(weights), {}, 0);
}

std::vector<double> TrainedModel::logits(std::span<const double> x) const {
  std::vector<double> z(spec_.num_classes);
  net_.forward(weights_, x, z);
  return z;
}

std::vector<double> TrainedModel::predict_proba(std::span<const double> x) const {
  return softmax(logits(x));
}

int TrainedModel::predict(std::span<const double> x) const {
  const auto z = logits(x);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<double> TrainedModel::hidden_representation(std::span<const double> x) const {
  return net_.last_hidden(weights_, x);
}

void TrainedModel::save(std::ostream& out) const {
  nlohmann::json header;
  header["format"] = "selgap-model";
  header["version"] = 1;
  header["kind"] = spec_.kind == ModelKind::logistic ? "logistic" : "mlp";
  header["activation"] = "relu";
  header["input_dim"] = spec_.input_dim;
  header["hidden_sizes"] = spec_.hidden_sizes;
  header["num_classes"] = spec_.num_classes;
  header["seed"] = seed_;
  header["epochs"] = loss_trace_.size();
  header["weight_count"] = weights_.size();
  std::vector<std::string> trace;
  for (double v : loss_trace_) trace.push_back(format_real(v));
  header["loss_trace"] = trace;
  out << header.dump() << '\n';
  for (double w : weights_) out << format_real(w) << '\n';
}

TrainedModel TrainedModel::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("model file: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model file: bad header: ") + e.what());
  }
  if (header.value("format", "") != "selgap-model" || header.value("version", 0) != 1) {
    throw std::runtime_error("model file: unsupported format or version");
  }
  ModelSpec spec;
  const std::string kind = header.at("kind").get<std::string>();
  if (kind == "logistic") {
    spec.kind = ModelKind::logistic;
  } else if (kind == "mlp") {
    spec.kind = ModelKind::mlp;
  } else {
    throw std::runtime_error("model file: unknown kind '" + kind + "'");
  }
  spec.input_dim = header.at("input_dim").get<std::size_t>();
  spec.hidden_sizes = header.at("hidden_sizes").get<std::vector<std::size_t>>();
  spec.num_classes = header.at("num_classes").get<std::size_t>();
  spec.validate();
  const auto count = header.at("weight_count").get<std::size_t>();
  std::vector<double> weights;
  weights.reserve(count);
  while (weights.size() < count && std::getline(in, line)) {
    if (line.empty()) continue;
    weights.push_back(std::stod(line));
  }
  if (weights.size() != count) throw std::runtime_error("model file: truncated weights");
  std::vector<double> trace;
  for (const auto& v : header.at("loss_trace")) trace.push_back(std::stod(v.get<std::string>()));
  return TrainedModel(std::move(spec), std::move(weights), std::move(trace),
                      header.at("seed").get<std::uint64_t>());
}

SupervisedView classification_view(const LabeledDataset& data) {
  SupervisedView view;
  view.dim = data.dim;
  view.inputs = data.features;
  view.labels = data.labels;
  return view;
}

TrainedModel train(const ModelSpec& spec, const TrainConfig& config,
                   const LabeledDataset& data) {
  spec.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (data.dim != spec.input_dim) {
    throw std::invalid_argument("train: feature dimension does not match the spec");
  }
  if (data.num_classes > spec.num_classes) {
    throw std::invalid_argument("train: dataset has more classes than the model");
  }
  const Network net(spec.layer_sizes(), OutputHead::softmax_cross_entropy);
  auto fit = fit_network(net, classification_view(data), config);
  return TrainedModel(spec, std::move(fit.weights), std::move(fit.loss_trace), config.seed);
}

double mean_cross_entropy(const TrainedModel& model, const LabeledDataset& data) {
  return model.network().mean_loss(model.weights(), classification_view(data));
}

double accuracy(const TrainedModel& model, const LabeledDataset& data) {
  if (data.empty()) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += model.predict(data.x(i)) == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Ensemble::Ensemble(std::vector<TrainedModel> members) : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("ensemble: no members");
  for (const auto& m : members_) {
    if (!(m.spec() == members_.front().spec())) {
      throw std::invalid_argument("ensemble: members must share one spec");
    }
  }
}

std::vector<double> Ensemble::predict_proba(std::span<const double> x) const {
  std::vector<double> mean(spec().num_classes, 0.0);
  for (const auto& m : members_) {
    const auto p = m.predict_proba(x);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  }
  for (double& v : mean) v /= static_cast<double>(members_.size());
  return mean;
}

int Ensemble::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> Ensemble::member_probabilities(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(members_.size() * spec().num_classes);
  for (const auto& m : members_) {
    const auto p = m.predict_proba(x);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Ensemble train_ensemble(const ModelSpec& spec, const TrainConfig& config,
                        const LabeledDataset& data, std::size_t m) {
  if (m < 2) throw std::invalid_argument("train_ensemble: need at least 2 members");
  std::vector<std::future<TrainedModel>> jobs;
  for (std::size_t i = 0; i < m; ++i) {
    TrainConfig member = config;
    member.seed = config.seed + i;
    jobs.push_back(std::async(std::launch::async,
                              [&spec, &data, member] { return train(spec, member, data); }));
  }
  std::vector<TrainedModel> members;
  for (auto& job : jobs) members.push_back(job.get());
  return Ensemble(std::move(members));
}

double accuracy(const Ensemble& ensemble, const LabeledDataset& data) {
  if (data.empty()) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    hits += ensemble.predict(data.x(i)) == data.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double optimization_slack(const TrainedModel& model, const LabeledDataset& data,
                          double reference_loss) {
  return std::max(0.0, mean_cross_entropy(model, data) - reference_loss);
}

double reference_logistic_loss(const LabeledDataset& data, std::size_t iterations) {
  if (data.empty()) throw std::invalid_argument("reference_logistic_loss: empty dataset");
  const Network net({data.dim, data.num_classes}, OutputHead::softmax_cross_entropy);
  const auto view = classification_view(data);
  // Softmax cross-entropy curvature is at most 0.5 * E|[x, 1]|^2.
  double second_moment = 1.0;
  for (double v : data.features) second_moment += v * v / static_cast<double>(data.size());
  const double step = 1.0 / (0.5 * second_moment);

  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<double> w(net.parameter_count(), 0.0), grad(w.size()), velocity(w.size(), 0.0);
  double best = net.mean_loss(w, view);
  for (std::size_t it = 0; it < iterations; ++it) {
    const double loss = net.loss_and_gradient(w, view, all, grad);
    best = std::min(best, loss);
    for (std::size_t p = 0; p < w.size(); ++p) {
      velocity[p] = 0.9 * velocity[p] - step * grad[p];
      w[p] += velocity[p];
    }
  }
  return std::min(best, net.mean_loss(w, view));
}

}  // namespace selgap
