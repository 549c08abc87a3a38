#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selgap/dataset.hpp"

namespace selgap {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<double, 4>;  // row-major {a, b, c, d} = [[a, b], [c, d]]

/// Gaussian classes with a shared covariance. The two-class case is the
/// usual construction; more classes are allowed for multiclass studies.
struct GaussianMixtureTask {
  std::vector<Vec2> means;
  Mat2 covariance{1.0, 0.0, 0.0, 1.0};
  std::vector<double> priors;

  static GaussianMixtureTask binary(Vec2 mean0, Vec2 mean1, Mat2 covariance,
                                    double class_prior);
  /// Means (-1, 0) and (1, 0), identity covariance, equal priors.
  static GaussianMixtureTask symmetric();

  std::size_t num_classes() const { return means.size(); }
  void validate() const;
};

LabeledDataset sample_gaussian_task(const GaussianMixtureTask& task,
                                    std::size_t n, std::uint64_t seed);

/// Exact Bayes posterior of the mixture (softmax of the linear discriminants).
PosteriorOracle analytic_oracle(const GaussianMixtureTask& task);

struct TwoMoonsTask {
  double noise_sigma = 0.1;
  int n_grid = 128;

  void validate() const;
};

/// Noiseless curve point. Moon 0 is the upper unit half-circle at the origin,
/// moon 1 the lower half-circle (1 - cos t, 0.5 - sin t); t in [0, pi].
Vec2 moon_point(int moon, double t);

/// Half the points per moon (moon 0 receives the extra point for odd n) at
/// evenly spaced curve parameters plus isotropic Gaussian jitter, returned in
/// a seeded random order. eta_true is left empty.
LabeledDataset sample_two_moons(const TwoMoonsTask& task, std::size_t n,
                                std::uint64_t seed);

/// Posterior obtained by averaging the Gaussian jitter kernel over
/// `mc_samples` stratified points per noiseless moon; evaluated directly.
PosteriorOracle kernel_posterior(const TwoMoonsTask& task,
                                 std::size_t mc_samples, std::uint64_t seed);

struct GridBox {
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
};

GridBox bounding_box(const LabeledDataset& data, double pad);

/// Tabulates `exact` on an n_grid x n_grid lattice over `box`; queries are
/// answered by bilinear interpolation, clamped to the box edge outside it.
PosteriorOracle tabulate_on_grid(const PosteriorOracle& exact, GridBox box,
                                 int n_grid);

/// Grid-estimate oracle for two-moons data: kernel posterior tabulated over
/// the data bounding box padded by 3 sigma. Throws for sigma == 0.
PosteriorOracle estimate_posterior_grid(const LabeledDataset& data,
                                        const TwoMoonsTask& task,
                                        std::size_t mc_samples,
                                        std::uint64_t seed);

enum class ShiftKind { identity, shear, rotation, translation };

struct ShiftTransform {
  ShiftKind kind = ShiftKind::identity;
  Mat2 matrix{1.0, 0.0, 0.0, 1.0};
  Vec2 offset{0.0, 0.0};

  static ShiftTransform identity();
  static ShiftTransform shear(double factor = 1.25);
  static ShiftTransform rotation(double radians = 3.14159265358979323846 / 6.0);
  static ShiftTransform translation(Vec2 t = {1.0, -0.5});

  Vec2 apply(Vec2 x) const;
  std::string name() const;
};

/// Transforms every feature row; labels are kept and eta_true is cleared.
LabeledDataset apply_shift(const LabeledDataset& data,
                           const ShiftTransform& shift);

/// Median of pairwise Euclidean distances over the pooled sample (strided
/// subsample of at most 1000 points per side).
double median_heuristic_bandwidth(const LabeledDataset& a,
                                  const LabeledDataset& b);

/// Square root of the unbiased MMD^2 U-statistic with an RBF kernel,
/// clamped at zero. Bandwidth defaults to the median heuristic.
double mmd_rbf(const LabeledDataset& a, const LabeledDataset& b,
               std::optional<double> bandwidth = std::nullopt);

}  // namespace selgap
