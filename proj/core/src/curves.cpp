#include "selgap/curves.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "selgap/csv.hpp"

namespace selgap {

std::vector<std::size_t> acceptance_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::size_t accepted_count(double coverage, std::size_t n) {
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw std::invalid_argument("coverage must lie in (0, 1]");
  }
  if (n == 0) throw std::invalid_argument("accepted_count: empty sample");
  // The epsilon keeps products such as 0.3 * 10 from rounding up a full step.
  const double raw = std::ceil(coverage * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
}

std::size_t max_tie_multiplicity(std::span<const double> scores) {
  if (scores.empty()) return 0;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t best = 1, run = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    run = sorted[i] == sorted[i - 1] ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

double CoverageCurve::accuracy_at(double coverage) const {
  return points[accepted_count(coverage, n) - 1].accuracy;
}

CoverageCurve empirical_curve(std::span<const ScoredSample> scored) {
  if (scored.empty()) throw std::invalid_argument("empirical_curve: empty input");
  const auto scores = scores_of(scored);
  const auto order = acceptance_order(scores);
  CoverageCurve curve;
  curve.n = scored.size();
  curve.points.reserve(curve.n);
  std::size_t hits = 0;
  for (std::size_t k = 1; k <= curve.n; ++k) {
    const auto& s = scored[order[k - 1]];
    hits += s.correct ? 1 : 0;
    curve.points.push_back({static_cast<double>(k) / static_cast<double>(curve.n),
                            static_cast<double>(hits) / static_cast<double>(k), s.score});
  }
  curve.points.back().coverage = 1.0;
  curve.a_full = curve.points.back().accuracy;
  return curve;
}

double oracle_bound(double a_full, double coverage) {
  if (!(coverage > 0.0)) throw std::invalid_argument("oracle_bound: coverage must be > 0");
  if (coverage > 1.0) throw std::invalid_argument("oracle_bound: coverage must be <= 1");
  if (!(a_full >= 0.0 && a_full <= 1.0)) {
    throw std::invalid_argument("oracle_bound: a_full must lie in [0, 1]");
  }
  return coverage <= a_full ? 1.0 : a_full / coverage;
}

double GapCurve::gap_at(double coverage) const {
  return points[accepted_count(coverage, points.size()) - 1].gap;
}

double integrate_prefix_grid(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("integrate_prefix_grid: no values");
  const double h = 1.0 / static_cast<double>(values.size());
  double total = values.front() * h;
  for (std::size_t k = 1; k < values.size(); ++k) total += 0.5 * (values[k - 1] + values[k]) * h;
  return total;
}

GapCurve gap_curve(const CoverageCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("gap_curve: empty curve");
  GapCurve gap;
  gap.points.reserve(curve.points.size());
  std::vector<double> values;
  values.reserve(curve.points.size());
  for (const auto& p : curve.points) {
    const double oracle = oracle_bound(curve.a_full, p.coverage);
    gap.points.push_back({p.coverage, oracle, p.accuracy, oracle - p.accuracy});
    values.push_back(oracle - p.accuracy);
  }
  gap.e_aurc = integrate_prefix_grid(values);
  return gap;
}

double aurc(const CoverageCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("aurc: empty curve");
  std::vector<double> risk;
  risk.reserve(curve.points.size());
  for (const auto& p : curve.points) risk.push_back(1.0 - p.accuracy);
  return integrate_prefix_grid(risk);
}

double stat_slack(std::size_t n, double delta) {
  if (n == 0) throw std::invalid_argument("stat_slack: n must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("stat_slack: delta must lie in (0,1)");
  return 3.0 * std::sqrt(std::log(6.0 / delta) / (2.0 * static_cast<double>(n)));
}

std::vector<GapPoint> resample(const GapCurve& gap, std::size_t n, std::span<const double> grid) {
  if (gap.points.size() != n) throw std::invalid_argument("resample: curve size mismatch");
  std::vector<GapPoint> out;
  out.reserve(grid.size());
  for (double c : grid) {
    GapPoint p = gap.points[accepted_count(c, n) - 1];
    p.coverage = c;
    out.push_back(p);
  }
  return out;
}

std::vector<double> uniform_grid(std::size_t points) {
  if (points == 0) throw std::invalid_argument("uniform_grid: need at least one point");
  std::vector<double> grid;
  for (std::size_t i = 1; i <= points; ++i) {
    grid.push_back(static_cast<double>(i) / static_cast<double>(points));
  }
  return grid;
}

void write_curve_csv(const CoverageCurve& curve, std::ostream& out) {
  out << "coverage,accuracy,threshold\n";
  for (const auto& p : curve.points) {
    out << format_real(p.coverage) << ',' << format_real(p.accuracy) << ','
        << format_real(p.threshold) << '\n';
  }
  out << "aurc," << format_real(aurc(curve)) << '\n';
  out << "e_aurc," << format_real(gap_curve(curve).e_aurc) << '\n';
}

void write_gap_csv(const CoverageCurve& curve, const GapCurve& gap, std::ostream& out) {
  out << "coverage,oracle,realized,gap\n";
  for (const auto& p : gap.points) {
    out << format_real(p.coverage) << ',' << format_real(p.oracle) << ','
        << format_real(p.realized) << ',' << format_real(p.gap) << '\n';
  }
  out << "aurc," << format_real(aurc(curve)) << '\n';
  out << "e_aurc," << format_real(gap.e_aurc) << '\n';
}

}  // namespace selgap
