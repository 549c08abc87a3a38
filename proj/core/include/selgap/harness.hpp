#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "selgap/models.hpp"
#include "selgap/synthdata.hpp"

namespace selgap {

enum class TaskKind { two_moons, gaussian };

struct NamedModel {
  std::string name;
  ModelSpec spec;
};

/// {0.05, 0.10, ..., 1.00}.
std::vector<double> default_coverage_grid();

/// Everything one experiment needs. Loaded from a JSON config file; see the
/// README for the key schema.
struct ExperimentConfig {
  std::string name = "experiment";
  TaskKind task = TaskKind::two_moons;
  TwoMoonsTask moons{};
  GaussianMixtureTask gaussian = GaussianMixtureTask::symmetric();
  std::vector<double> noise_levels{0.1, 0.33, 0.66, 1.5};
  // input_dim and num_classes are overwritten from the task at run time.
  std::vector<NamedModel> models{{"mlp", ModelSpec::mlp(2, {32, 32}, 2)}};
  TrainConfig train{};
  std::size_t n_samples = 5000;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double delta = 0.05;
  std::vector<double> coverage_grid = default_coverage_grid();
  std::vector<ShiftTransform> shifts;
  std::size_t ensemble_size = 5;
  std::size_t ece_bins = 15;
  std::size_t mc_samples = 1000;
  std::size_t swap_subsample = 200;
  std::filesystem::path output_dir = "runs/experiment";

  static ExperimentConfig from_json(const std::string& text);
  std::string to_json() const;
  /// 16-hex-digit FNV-1a hash of the canonical JSON form, output_dir excluded.
  std::string hash() const;
  void validate() const;
};

/// Train / validation / test indices from one seeded permutation.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

Split make_split(std::size_t n, double train_fraction, double val_fraction,
                 std::uint64_t seed);

struct MetricRow {
  std::string experiment;
  std::string config_key;
  std::string config_hash;
  std::uint64_t seed = 0;
  double a_full = 0.0;
  double aurc = 0.0;
  double e_aurc = 0.0;
  double ece = 0.0;
  double eps_bayes = 0.0;   // grid means of the decomposition terms
  double eps_approx = 0.0;
  double eps_rank = 0.0;
  double d_rank = 0.0;
  double holds_fraction = 1.0;
  double eps_misc = 0.0;
  double eps_opt = 0.0;
  double mmd = 0.0;
  double swap_bound = 0.0;
};

struct TrendAssertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CurveDump {
  std::string file_name;
  std::string contents;
};

struct RunReport {
  std::string experiment;
  std::string config_hash;
  std::string config_json;
  std::vector<MetricRow> rows;
  std::vector<TrendAssertion> assertions;
  std::vector<CurveDump> curves;  // per (configuration, seed) gap curves
  std::vector<CurveDump> splits;  // per seed split indices

  bool ok() const;
  /// Rows whose config_key equals `key`, in seed order.
  std::vector<MetricRow> rows_for(const std::string& key) const;
};

/// Mean and standard error of a metric over rows.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe summarize(const std::vector<MetricRow>& rows, double MetricRow::*field);

/// Integral over the prefix grid of m_k / k, where m_k counts samples in the
/// top-k set of `a` but not of `b`. Bounds the accuracy change at every prefix
/// and hence the E-AURC change between the two score orders.
double swap_mass_bound(std::span<const double> a, std::span<const double> b);

RunReport cmd_sweep_noise(const ExperimentConfig& config);
RunReport cmd_sweep_capacity(const ExperimentConfig& config);
RunReport cmd_calibration_study(const ExperimentConfig& config);
RunReport cmd_shift_study(const ExperimentConfig& config);

/// Writes report.csv, assertions.csv, config.json, curves/ and splits/ under
/// `dir` (each file atomically).
void write_run(const RunReport& report, const std::filesystem::path& dir);

// report.csv column order.
std::string metric_csv_header();

/// Merges report.csv files from run directories into `out_dir/report.csv`
/// and writes one seed-averaged gap_curve__<hash>__<key>.csv per
/// configuration. Throws listing every missing or corrupt path.
void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_dir);

}  // namespace selgap
