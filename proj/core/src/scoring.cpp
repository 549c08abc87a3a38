#include "selgap/scoring.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "selgap/csv.hpp"
#include "selgap/losspred.hpp"

namespace selgap {

Predictor::Predictor(std::shared_ptr<const TrainedModel> model) : backing_(std::move(model)) {
  if (!std::get<0>(backing_)) throw std::invalid_argument("predictor: null model");
}

Predictor::Predictor(std::shared_ptr<const Ensemble> ensemble) : backing_(std::move(ensemble)) {
  if (!std::get<1>(backing_)) throw std::invalid_argument("predictor: null ensemble");
}

bool Predictor::is_ensemble() const { return backing_.index() == 1; }

const TrainedModel& Predictor::model() const {
  if (is_ensemble()) throw std::logic_error("predictor: backing is an ensemble");
  return *std::get<0>(backing_);
}

const Ensemble& Predictor::ensemble() const {
  if (!is_ensemble()) throw std::logic_error("predictor: backing is a single model");
  return *std::get<1>(backing_);
}

std::size_t Predictor::num_classes() const {
  return is_ensemble() ? ensemble().spec().num_classes : model().spec().num_classes;
}

std::size_t Predictor::input_dim() const {
  return is_ensemble() ? ensemble().spec().input_dim : model().spec().input_dim;
}

std::vector<double> Predictor::probabilities(std::span<const double> x,
                                             double temperature) const {
  if (is_ensemble()) {
    if (temperature != 1.0) {
      throw std::invalid_argument("predictor: temperature applies to single models only");
    }
    return ensemble().predict_proba(x);
  }
  return softmax(model().logits(x), temperature);
}

int Predictor::label(std::span<const double> x) const {
  return is_ensemble() ? ensemble().predict(x) : model().predict(x);
}

const char* to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::msp: return "msp";
    case ScoreKind::neg_self_entropy: return "neg_self_entropy";
    case ScoreKind::ensemble_mean_msp: return "ensemble_mean_msp";
    case ScoreKind::ensemble_neg_variance: return "ensemble_neg_variance";
    case ScoreKind::oracle_eta_h: return "oracle_eta_h";
    case ScoreKind::loss_predictor_head: return "loss_predictor_head";
  }
  return "unknown";
}

ScoreFunction ScoreFunction::msp(double temperature) {
  ScoreFunction f;
  f.kind = ScoreKind::msp;
  f.temperature = temperature;
  return f;
}

ScoreFunction ScoreFunction::neg_self_entropy() {
  ScoreFunction f;
  f.kind = ScoreKind::neg_self_entropy;
  return f;
}

ScoreFunction ScoreFunction::ensemble_mean_msp() {
  ScoreFunction f;
  f.kind = ScoreKind::ensemble_mean_msp;
  return f;
}

ScoreFunction ScoreFunction::ensemble_neg_variance() {
  ScoreFunction f;
  f.kind = ScoreKind::ensemble_neg_variance;
  return f;
}

ScoreFunction ScoreFunction::oracle_eta_h(std::shared_ptr<const PosteriorOracle> oracle) {
  ScoreFunction f;
  f.kind = ScoreKind::oracle_eta_h;
  f.oracle = std::move(oracle);
  return f;
}

ScoreFunction ScoreFunction::loss_predictor_head(std::shared_ptr<const LossPredictor> predictor) {
  ScoreFunction f;
  f.kind = ScoreKind::loss_predictor_head;
  f.loss_predictor = std::move(predictor);
  return f;
}

void SelectivePair::validate() const {
  if (!(score.temperature > 0.0)) throw std::invalid_argument("score: temperature must be > 0");
  switch (score.kind) {
    case ScoreKind::msp:
    case ScoreKind::neg_self_entropy:
      if (predictor.is_ensemble() && score.temperature != 1.0) {
        throw std::invalid_argument("score: tempered msp needs a single model");
      }
      break;
    case ScoreKind::ensemble_mean_msp:
    case ScoreKind::ensemble_neg_variance:
      if (!predictor.is_ensemble()) {
        throw std::invalid_argument(std::string("score: ") + to_string(score.kind) +
                                    " needs an ensemble predictor");
      }
      break;
    case ScoreKind::oracle_eta_h:
      if (!score.oracle) throw std::invalid_argument("score: oracle_eta_h needs a posterior oracle");
      if (score.oracle->num_classes() != predictor.num_classes()) {
        throw std::invalid_argument("score: oracle and predictor disagree on class count");
      }
      break;
    case ScoreKind::loss_predictor_head:
      if (!score.loss_predictor) {
        throw std::invalid_argument("score: loss_predictor_head needs a loss predictor");
      }
      break;
  }
}

double max_probability(std::span<const double> p) {
  if (p.empty()) throw std::invalid_argument("max_probability: empty vector");
  return *std::max_element(p.begin(), p.end());
}

namespace {

double score_unchecked(const SelectivePair& pair, std::span<const double> x) {
  const auto& f = pair.score;
  switch (f.kind) {
    case ScoreKind::msp:
    case ScoreKind::neg_self_entropy:
      return max_probability(pair.predictor.probabilities(x, f.temperature));
    case ScoreKind::ensemble_mean_msp:
      return max_probability(pair.predictor.ensemble().predict_proba(x));
    case ScoreKind::ensemble_neg_variance: {
      const auto& ens = pair.predictor.ensemble();
      const auto mean = ens.predict_proba(x);
      const auto top = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) -
                                                mean.begin());
      const auto members = ens.member_probabilities(x);
      const std::size_t k = mean.size(), m = ens.size();
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = members[i * k + top] - mean[top];
        var += d * d;
      }
      return -var / static_cast<double>(m);
    }
    case ScoreKind::oracle_eta_h: {
      const auto eta = (*f.oracle)(x);
      return eta[static_cast<std::size_t>(pair.predictor.label(x))];
    }
    case ScoreKind::loss_predictor_head: {
      const auto phi = loss_features(pair.predictor, x, f.loss_predictor->mode());
      return 1.0 - f.loss_predictor->predict(phi);
    }
  }
  throw std::logic_error("score: unknown kind");
}

}  // namespace

double score(const SelectivePair& pair, std::span<const double> x) {
  pair.validate();
  if (x.size() != pair.predictor.input_dim()) {
    throw std::invalid_argument("score: feature dimension mismatch");
  }
  return score_unchecked(pair, x);
}

std::vector<ScoredSample> score_dataset(const SelectivePair& pair, const LabeledDataset& data) {
  pair.validate();
  if (data.empty()) throw std::invalid_argument("score_dataset: empty dataset");
  if (data.dim != pair.predictor.input_dim()) {
    throw std::invalid_argument("score_dataset: feature dimension mismatch");
  }
  std::vector<ScoredSample> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.x(i);
    out.push_back({score_unchecked(pair, x), pair.predictor.label(x) == data.labels[i]});
  }
  return out;
}

std::vector<int> predict_labels(const Predictor& predictor, const LabeledDataset& data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(predictor.label(data.x(i)));
  return out;
}

std::vector<double> scores_of(std::span<const ScoredSample> scored) {
  std::vector<double> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back(s.score);
  return out;
}

void write_scored_csv(std::span<const ScoredSample> scored, std::ostream& out) {
  out << "score,correct\n";
  for (const auto& s : scored) out << format_real(s.score) << ',' << (s.correct ? 1 : 0) << '\n';
}

std::vector<ScoredSample> read_scored_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"score", "correct"}) {
    throw std::runtime_error("scored csv: expected header 'score,correct'");
  }
  std::vector<ScoredSample> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2 || (f[1] != "0" && f[1] != "1")) {
      throw std::runtime_error("scored csv: malformed row '" + line + "'");
    }
    out.push_back({std::stod(f[0]), f[1] == "1"});
  }
  return out;
}

}  // namespace selgap
