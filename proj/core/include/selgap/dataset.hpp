#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace selgap {

/// Feature vectors with class labels and, for synthetic data, the ground-truth
/// posterior at every point. Features and posteriors are stored row-major.
struct LabeledDataset {
  std::size_t dim = 0;
  std::size_t num_classes = 2;
  std::vector<double> features;  // size() * dim
  std::vector<int> labels;
  std::vector<double> eta_true;  // size() * num_classes, or empty
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  bool has_eta() const { return !eta_true.empty(); }

  std::span<const double> x(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  std::span<const double> eta(std::size_t i) const {
    return {eta_true.data() + i * num_classes, num_classes};
  }

  /// Throws std::invalid_argument when the layout or any invariant is broken.
  void validate() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;
};

enum class Provenance { analytic, grid_estimate };

/// Queryable ground-truth posterior over classes.
class PosteriorOracle {
 public:
  using Evaluator =
      std::function<void(std::span<const double> x, std::span<double> out)>;

  PosteriorOracle(std::size_t num_classes, Provenance provenance,
                  Evaluator evaluator);

  std::size_t num_classes() const { return num_classes_; }
  Provenance provenance() const { return provenance_; }

  void evaluate(std::span<const double> x, std::span<double> out) const;
  std::vector<double> operator()(std::span<const double> x) const;

  /// Returns a copy of `data` whose eta_true is filled from this oracle.
  LabeledDataset annotate(LabeledDataset data) const;

 private:
  std::size_t num_classes_;
  Provenance provenance_;
  Evaluator evaluator_;
};

// CSV layout: x0,...,x{D-1},label[,eta0,...,eta{K-1}]
void write_dataset_csv(const LabeledDataset& data, std::ostream& out);
LabeledDataset read_dataset_csv(std::istream& in);

}  // namespace selgap
