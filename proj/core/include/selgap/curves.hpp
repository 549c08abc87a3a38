#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "selgap/scoring.hpp"

namespace selgap {

// Accuracy-coverage curves on the exact prefix grid k/N.
//
// Tie rule, shared by every acceptance-set computation in the library:
// samples are ordered by score descending, ties broken by original index
// ascending (a stable sort).

/// Indices in acceptance order.
std::vector<std::size_t> acceptance_order(std::span<const double> scores);

/// Number of accepted samples at coverage c: ceil(c * n), at least 1.
std::size_t accepted_count(double coverage, std::size_t n);

/// Largest number of samples sharing one score value (kappa).
std::size_t max_tie_multiplicity(std::span<const double> scores);

struct CurvePoint {
  double coverage = 0.0;
  double accuracy = 0.0;
  double threshold = 0.0;
};

struct CoverageCurve {
  std::vector<CurvePoint> points;  // coverage ascending, k = 1..n
  std::size_t n = 0;
  double a_full = 0.0;

  /// Selective accuracy at the prefix ceil(c * n).
  double accuracy_at(double coverage) const;
};

CoverageCurve empirical_curve(std::span<const ScoredSample> scored);

/// Perfect-ordering upper bound: 1 for c <= a_full, a_full / c otherwise.
double oracle_bound(double a_full, double coverage);

struct GapPoint {
  double coverage = 0.0;
  double oracle = 0.0;
  double realized = 0.0;
  double gap = 0.0;
};

struct GapCurve {
  std::vector<GapPoint> points;
  double e_aurc = 0.0;

  double gap_at(double coverage) const;
};

GapCurve gap_curve(const CoverageCurve& curve);

/// Trapezoid over the prefix grid; the integrand is held at its first value
/// on (0, 1/n].
double integrate_prefix_grid(std::span<const double> values);

/// Risk-based area under the curve: integral of (1 - accuracy) dc.
double aurc(const CoverageCurve& curve);

/// 3 * sqrt(log(6 / delta) / (2 n)): three Hoeffding deviations combined by
/// a union bound.
double stat_slack(std::size_t n, double delta);

/// Step-interpolated curve values on an arbitrary coverage grid.
std::vector<GapPoint> resample(const GapCurve& gap, std::size_t n,
                               std::span<const double> grid);

std::vector<double> uniform_grid(std::size_t points);  // {1/p, 2/p, ..., 1}

// CSV layouts: coverage,accuracy,threshold / coverage,oracle,realized,gap,
// each followed by `aurc,<v>` and `e_aurc,<v>` footer rows.
void write_curve_csv(const CoverageCurve& curve, std::ostream& out);
void write_gap_csv(const CoverageCurve& curve, const GapCurve& gap,
                   std::ostream& out);

}  // namespace selgap
