#include "selgap/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "selgap/csv.hpp"
#include "selgap/curves.hpp"

namespace selgap {

namespace {

void require_eta(const LabeledDataset& data) {
  if (!data.has_eta()) throw std::invalid_argument("decomposition requires eta_true");
}

void require_nonempty(std::span<const std::size_t> accepted) {
  if (accepted.empty()) throw std::invalid_argument("empty acceptance set");
}

double mean_over(std::span<const double> values, std::span<const std::size_t> indices) {
  double total = 0.0;
  for (auto i : indices) total += values[i];
  return total / static_cast<double>(indices.size());
}

// Fraction of the first k entries of `a` missing from the first k of `b`.
std::size_t prefix_difference(std::span<const std::size_t> a, std::span<const std::size_t> b,
                              std::size_t k, std::vector<char>& mark) {
  std::fill(mark.begin(), mark.end(), 0);
  for (std::size_t j = 0; j < k; ++j) mark[b[j]] = 1;
  std::size_t missing = 0;
  for (std::size_t j = 0; j < k; ++j) missing += mark[a[j]] ? 0 : 1;
  return missing;
}

}  // namespace

double correctness_posterior(std::span<const double> eta_row, int predicted) {
  if (predicted < 0 || static_cast<std::size_t>(predicted) >= eta_row.size()) {
    throw std::out_of_range("predicted label outside the posterior");
  }
  return eta_row[static_cast<std::size_t>(predicted)];
}

double correctness_posterior(const PosteriorOracle& oracle, const Predictor& predictor,
                             std::span<const double> x) {
  if (oracle.num_classes() != predictor.num_classes()) {
    throw std::invalid_argument("oracle and predictor disagree on the class count");
  }
  return correctness_posterior(oracle(x), predictor.label(x));
}

std::vector<double> correctness_posteriors(const LabeledDataset& data,
                                           std::span<const int> predicted) {
  require_eta(data);
  if (predicted.size() != data.size()) throw std::invalid_argument("prediction count mismatch");
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = correctness_posterior(data.eta(i), predicted[i]);
  return out;
}

double eps_bayes(const LabeledDataset& data, std::span<const std::size_t> accepted) {
  require_eta(data);
  require_nonempty(accepted);
  double total = 0.0;
  for (auto i : accepted) {
    const auto row = data.eta(i);
    total += 1.0 - *std::max_element(row.begin(), row.end());
  }
  return total / static_cast<double>(accepted.size());
}

double eps_approx(const LabeledDataset& data, std::span<const int> predicted,
                  std::span<const std::size_t> accepted) {
  require_eta(data);
  require_nonempty(accepted);
  if (predicted.size() != data.size()) throw std::invalid_argument("prediction count mismatch");
  double total = 0.0;
  for (auto i : accepted) {
    const auto row = data.eta(i);
    const double eta_h = correctness_posterior(row, predicted[i]);
    const double reference =
        data.num_classes == 2 ? row[1] : *std::max_element(row.begin(), row.end());
    total += std::abs(eta_h - reference);
  }
  return total / static_cast<double>(accepted.size());
}

std::vector<std::size_t> top_fraction(std::span<const double> values, double coverage) {
  auto order = acceptance_order(values);
  order.resize(accepted_count(coverage, values.size()));
  return order;
}

double eps_rank(std::span<const double> eta_h, std::span<const double> scores, double coverage) {
  if (eta_h.size() != scores.size()) throw std::invalid_argument("eps_rank: length mismatch");
  if (eta_h.empty()) throw std::invalid_argument("eps_rank: empty input");
  const auto oracle_set = top_fraction(eta_h, coverage);
  const auto score_set = top_fraction(scores, coverage);
  return mean_over(eta_h, oracle_set) - mean_over(eta_h, score_set);
}

double d_rank(std::span<const double> scores, std::span<const double> eta_h, double coverage) {
  if (eta_h.size() != scores.size()) throw std::invalid_argument("d_rank: length mismatch");
  if (eta_h.empty()) throw std::invalid_argument("d_rank: empty input");
  const auto a = acceptance_order(scores);
  const auto b = acceptance_order(eta_h);
  const std::size_t k = accepted_count(coverage, scores.size());
  std::vector<char> mark(scores.size());
  const std::size_t only_a = prefix_difference(a, b, k, mark);
  const std::size_t only_b = prefix_difference(b, a, k, mark);
  return static_cast<double>(only_a + only_b) / static_cast<double>(scores.size());
}

std::size_t GapDecomposition::violations() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const DecompositionRow& r) { return !r.holds; }));
}

GapDecomposition decompose(const LabeledDataset& data, std::span<const int> predicted,
                           std::span<const double> scores, std::span<const double> coverage_grid,
                           double delta) {
  require_eta(data);
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("decompose: empty dataset");
  if (predicted.size() != n || scores.size() != n) {
    throw std::invalid_argument("decompose: per-sample arrays must match the dataset");
  }
  if (coverage_grid.empty()) throw std::invalid_argument("decompose: empty coverage grid");

  std::vector<ScoredSample> scored(n);
  for (std::size_t i = 0; i < n; ++i) scored[i] = {scores[i], predicted[i] == data.labels[i]};
  const auto curve = empirical_curve(scored);
  const auto gap = gap_curve(curve);
  const auto eta_h = correctness_posteriors(data, predicted);
  const auto score_order = acceptance_order(scores);
  const auto oracle_order = acceptance_order(eta_h);

  GapDecomposition out;
  out.delta = delta;
  out.n = n;
  out.kappa = max_tie_multiplicity(scores);
  const double slack = stat_slack(n, delta);
  std::vector<char> mark(n);

  for (double c : coverage_grid) {
    const std::size_t k = accepted_count(c, n);
    const std::span<const std::size_t> accepted(score_order.data(), k);
    const std::span<const std::size_t> oracle_set(oracle_order.data(), k);
    DecompositionRow row;
    row.coverage = c;
    row.gap = gap.points[k - 1].gap;
    row.eps_bayes = eps_bayes(data, accepted);
    row.eps_approx = eps_approx(data, predicted, accepted);
    row.eps_rank = mean_over(eta_h, oracle_set) - mean_over(eta_h, accepted);
    row.d_rank = static_cast<double>(prefix_difference(score_order, oracle_order, k, mark) +
                                     prefix_difference(oracle_order, score_order, k, mark)) /
                 static_cast<double>(n);
    row.stat_slack = slack;
    row.bound_rhs = row.eps_bayes + row.eps_approx + row.eps_rank + row.stat_slack;
    row.holds = row.gap <= row.bound_rhs;
    row.eps_misc = std::max(0.0, row.gap - row.bound_rhs);
    out.rows.push_back(row);
  }
  return out;
}

GapDecomposition decompose(const LabeledDataset& data, const SelectivePair& pair,
                           std::span<const double> coverage_grid, double delta) {
  pair.validate();
  const auto predicted = predict_labels(pair.predictor, data);
  const auto scored = score_dataset(pair, data);
  const auto scores = scores_of(scored);
  return decompose(data, predicted, scores, coverage_grid, delta);
}

void write_decomposition_csv(const GapDecomposition& decomposition, std::ostream& out) {
  out << "coverage,gap,eps_bayes,eps_approx,eps_rank,d_rank,eps_stat,bound_rhs,holds\n";
  for (const auto& r : decomposition.rows) {
    out << format_real(r.coverage) << ',' << format_real(r.gap) << ','
        << format_real(r.eps_bayes) << ',' << format_real(r.eps_approx) << ','
        << format_real(r.eps_rank) << ',' << format_real(r.d_rank) << ','
        << format_real(r.stat_slack) << ',' << format_real(r.bound_rhs) << ','
        << (r.holds ? 1 : 0) << '\n';
  }
}

}  // namespace selgap
