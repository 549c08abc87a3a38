#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "selgap/dataset.hpp"
#include "selgap/models.hpp"

namespace selgap {

class LossPredictor;

/// A single trained model or an ensemble, shared read-only.
class Predictor {
 public:
  Predictor(std::shared_ptr<const TrainedModel> model);
  Predictor(std::shared_ptr<const Ensemble> ensemble);

  bool is_ensemble() const;
  const TrainedModel& model() const;
  const Ensemble& ensemble() const;
  std::size_t num_classes() const;
  std::size_t input_dim() const;

  /// Class probabilities; `temperature` rescales single-model logits and
  /// must be 1 for ensembles.
  std::vector<double> probabilities(std::span<const double> x,
                                    double temperature = 1.0) const;
  int label(std::span<const double> x) const;

 private:
  std::variant<std::shared_ptr<const TrainedModel>,
               std::shared_ptr<const Ensemble>>
      backing_;
};

enum class ScoreKind {
  msp,
  neg_self_entropy,  // 1 - SEP(x); numerically equal to msp
  ensemble_mean_msp,
  ensemble_neg_variance,
  oracle_eta_h,
  loss_predictor_head,
};

const char* to_string(ScoreKind kind);

struct ScoreFunction {
  ScoreKind kind = ScoreKind::msp;
  std::shared_ptr<const PosteriorOracle> oracle;
  std::shared_ptr<const LossPredictor> loss_predictor;
  double temperature = 1.0;  // msp / neg_self_entropy on a single model

  static ScoreFunction msp(double temperature = 1.0);
  static ScoreFunction neg_self_entropy();
  static ScoreFunction ensemble_mean_msp();
  static ScoreFunction ensemble_neg_variance();
  static ScoreFunction oracle_eta_h(std::shared_ptr<const PosteriorOracle> oracle);
  static ScoreFunction loss_predictor_head(
      std::shared_ptr<const LossPredictor> predictor);
};

/// (h, g): predicts h(x) when g(x, h) clears the threshold.
struct SelectivePair {
  Predictor predictor;
  ScoreFunction score;

  /// Throws std::invalid_argument when the score's backing does not match.
  void validate() const;
};

double max_probability(std::span<const double> p);

double score(const SelectivePair& pair, std::span<const double> x);

struct ScoredSample {
  double score = 0.0;
  bool correct = false;
};

std::vector<ScoredSample> score_dataset(const SelectivePair& pair,
                                        const LabeledDataset& data);

std::vector<int> predict_labels(const Predictor& predictor,
                                const LabeledDataset& data);

std::vector<double> scores_of(std::span<const ScoredSample> scored);

// CSV layout: score,correct
void write_scored_csv(std::span<const ScoredSample> scored, std::ostream& out);
std::vector<ScoredSample> read_scored_csv(std::istream& in);

}  // namespace selgap
