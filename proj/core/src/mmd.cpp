#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "selgap/synthdata.hpp"

namespace selgap {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

void check_pair(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("mmd: each sample needs at least 2 points");
  }
  if (a.dim != b.dim) throw std::invalid_argument("mmd: feature dimensions differ");
}

std::vector<std::span<const double>> strided_rows(const LabeledDataset& d,
                                                  std::size_t cap) {
  const std::size_t stride = (d.size() + cap - 1) / cap;
  std::vector<std::span<const double>> rows;
  for (std::size_t i = 0; i < d.size(); i += stride) rows.push_back(d.x(i));
  return rows;
}

}  // namespace

double median_heuristic_bandwidth(const LabeledDataset& a, const LabeledDataset& b) {
  check_pair(a, b);
  auto pooled = strided_rows(a, 1000);
  const auto rows_b = strided_rows(b, 1000);
  pooled.insert(pooled.end(), rows_b.begin(), rows_b.end());
  std::vector<double> dist;
  dist.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      dist.push_back(squared_distance(pooled[i], pooled[j]));
    }
  }
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  const double h = std::sqrt(*mid);
  return h > 0.0 ? h : 1.0;
}

double mmd_rbf(const LabeledDataset& a, const LabeledDataset& b,
               std::optional<double> bandwidth) {
  check_pair(a, b);
  const double h = bandwidth ? *bandwidth : median_heuristic_bandwidth(a, b);
  if (!(h > 0.0)) throw std::invalid_argument("mmd: bandwidth must be positive");
  const double gamma = 1.0 / (2.0 * h * h);
  auto kernel = [gamma](std::span<const double> u, std::span<const double> v) {
    return std::exp(-gamma * squared_distance(u, v));
  };

  auto within = [&](const LabeledDataset& s) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = i + 1; j < s.size(); ++j) total += kernel(s.x(i), s.x(j));
    }
    const double m = static_cast<double>(s.size());
    return 2.0 * total / (m * (m - 1.0));
  };
  double cross = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) cross += kernel(a.x(i), b.x(j));
  }
  cross /= static_cast<double>(a.size()) * static_cast<double>(b.size());
  const double mmd2 = within(a) + within(b) - 2.0 * cross;
  return std::sqrt(std::max(0.0, mmd2));
}

}  // namespace selgap
