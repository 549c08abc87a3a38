#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace selgap {

enum class CalibratorKind { temperature, isotonic, histogram };

/// Post-hoc map from scores (or logits, for temperature) to confidences.
class Calibrator {
 public:
  static Calibrator temperature(double t);
  /// Piecewise-linear interpolation through nondecreasing knots, constant
  /// beyond the end knots.
  static Calibrator isotonic(std::vector<double> knots_x,
                             std::vector<double> knots_y);
  /// `edges` has size(values) + 1 entries; values lie in [0, 1].
  static Calibrator histogram(std::vector<double> edges,
                              std::vector<double> values);

  CalibratorKind kind() const { return kind_; }
  double temperature_value() const { return temperature_; }
  const std::vector<double>& knots_x() const { return xs_; }
  const std::vector<double>& knots_y() const { return ys_; }

  /// Score-level map (isotonic / histogram).
  double apply(double score) const;
  /// Tempered softmax (temperature kind).
  std::vector<double> apply_logits(std::span<const double> logits) const;

 private:
  CalibratorKind kind_ = CalibratorKind::temperature;
  double temperature_ = 1.0;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

struct TemperatureFit {
  Calibrator calibrator = Calibrator::temperature(1.0);
  bool at_boundary = false;
  std::optional<std::string> warning;
};

struct TemperatureRange {
  double log_lo = -3.0;
  double log_hi = 3.0;
};

/// Mean NLL of tempered softmax over `logit_rows` (n x K, row-major).
double tempered_nll(std::span<const double> logit_rows, std::size_t num_classes,
                    std::span<const int> labels, double temperature);

/// Golden-section search on log T for the NLL-minimizing temperature.
TemperatureFit fit_temperature(std::span<const double> logit_rows,
                               std::size_t num_classes,
                               std::span<const int> labels,
                               TemperatureRange range = {});

std::vector<double> apply_temperature(std::span<const double> logits,
                                      double temperature);

/// Max tempered probability computed as 1 / (1 + sum_{j != j*} r_j^(1/T)),
/// r_j = exp(z_j - z_j*).
double tempered_max_probability(std::span<const double> logits,
                                double temperature);

/// S(T) = sum_{j != j*} r_j^(1/T).
double competitor_mass(std::span<const double> logits, double temperature);

struct SwapInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SwapReport {
  std::vector<SwapInterval> crossings;
  bool degenerate = false;  // S_1 == S_2 on the whole grid
};

/// Temperatures at which the tempered-confidence order of two logit vectors
/// flips: sign changes of S_1(T) - S_2(T) over the sorted grid, each refined
/// by bisection to width 1e-6.
SwapReport find_swap_temperatures(std::span<const double> z1,
                                  std::span<const double> z2,
                                  std::span<const double> t_grid);

/// Pool-adjacent-violators fit in score order; tied scores are pooled first.
/// Returns the fitted value for every input, in input order.
std::vector<double> isotonic_fit_values(std::span<const double> scores,
                                        std::span<const double> targets);

Calibrator fit_isotonic(std::span<const double> scores,
                        std::span<const double> correct);

/// Equal-width bins on [0, 1]; each bin maps to its empirical accuracy
/// (bin midpoint when empty).
Calibrator fit_histogram(std::span<const double> scores,
                         std::span<const double> correct, std::size_t n_bins);

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct ReliabilityReport {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
  std::size_t n_bins = 15;
};

/// Equal-width, right-closed bins (0 falls in the first bin), mass-weighted
/// |accuracy - confidence|.
ReliabilityReport ece(std::span<const double> confidences,
                      std::span<const double> correct, std::size_t n_bins = 15);

// CSV layout: bin_lo,bin_hi,count,mean_conf,accuracy + footer ece,<v>
void write_reliability_csv(const ReliabilityReport& report, std::ostream& out);

}  // namespace selgap
