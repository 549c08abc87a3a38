#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "selgap/dataset.hpp"
#include "selgap/scoring.hpp"

namespace selgap {

/// eta_h(x) = Pr(h(x) = Y | X = x), i.e. the posterior of the predicted class.
double correctness_posterior(std::span<const double> eta_row, int predicted);
double correctness_posterior(const PosteriorOracle& oracle,
                             const Predictor& predictor,
                             std::span<const double> x);

std::vector<double> correctness_posteriors(const LabeledDataset& data,
                                           std::span<const int> predicted);

/// Mean of 1 - max_k eta_k over the accepted indices.
double eps_bayes(const LabeledDataset& data,
                 std::span<const std::size_t> accepted);

/// Mean of |eta_h - eta| over the accepted indices. For two classes eta is the
/// class-1 posterior, so the term vanishes wherever class 1 is predicted. For
/// more classes the one-vs-rest reduction compares eta_h with max_k eta_k.
double eps_approx(const LabeledDataset& data, std::span<const int> predicted,
                  std::span<const std::size_t> accepted);

/// Top-ceil(c n) indices by `values` under the shared tie rule.
std::vector<std::size_t> top_fraction(std::span<const double> values,
                                      double coverage);

/// Mean eta_h over the oracle set minus mean eta_h over the score set.
double eps_rank(std::span<const double> eta_h, std::span<const double> scores,
                double coverage);

/// Empirical mass of the symmetric difference of the two acceptance sets.
double d_rank(std::span<const double> scores, std::span<const double> eta_h,
              double coverage);

struct DecompositionRow {
  double coverage = 0.0;
  double gap = 0.0;
  double eps_bayes = 0.0;
  double eps_approx = 0.0;
  double eps_rank = 0.0;
  double d_rank = 0.0;
  double stat_slack = 0.0;
  double bound_rhs = 0.0;
  bool holds = false;
  double eps_misc = 0.0;  // max(0, gap - bound_rhs), diagnostic only
};

struct GapDecomposition {
  std::vector<DecompositionRow> rows;
  double delta = 0.05;
  std::size_t n = 0;
  std::size_t kappa = 1;  // score tie multiplicity

  std::size_t violations() const;
};

/// Array-level decomposition: `scores` and `predicted` are per-sample and
/// `data` must carry eta_true.
GapDecomposition decompose(const LabeledDataset& data,
                           std::span<const int> predicted,
                           std::span<const double> scores,
                           std::span<const double> coverage_grid, double delta);

GapDecomposition decompose(const LabeledDataset& data,
                           const SelectivePair& pair,
                           std::span<const double> coverage_grid, double delta);

// CSV layout: coverage,gap,eps_bayes,eps_approx,eps_rank,d_rank,eps_stat,bound_rhs,holds
void write_decomposition_csv(const GapDecomposition& decomposition,
                             std::ostream& out);

}  // namespace selgap
