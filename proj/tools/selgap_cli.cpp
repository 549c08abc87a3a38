#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "selgap/calibration.hpp"
#include "selgap/csv.hpp"
#include "selgap/curves.hpp"
#include "selgap/decomposition.hpp"
#include "selgap/harness.hpp"
#include "selgap/losspred.hpp"
#include "selgap/models.hpp"
#include "selgap/scoring.hpp"
#include "selgap/synthdata.hpp"

namespace fs = std::filesystem;
using namespace selgap;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> delta;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the seed list with a single seed");
  auto* out = cmd->add_option("--out", c.out, "Output file or directory");
  if (out_required) out->required();
  cmd->add_option("--delta", c.delta, "Override the confidence parameter");
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = ExperimentConfig::from_json(read_file(c.config_path));
  if (c.seed) cfg.seeds = {*c.seed};
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.delta) cfg.delta = *c.delta;
  cfg.validate();
  return cfg;
}

LabeledDataset load_dataset(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_dataset_csv(in);
}

std::shared_ptr<const TrainedModel> load_model(const std::string& path) {
  std::istringstream in(read_file(path));
  return std::make_shared<const TrainedModel>(TrainedModel::load(in));
}

template <typename Writer>
void emit(const std::string& path, Writer writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file_atomic(p, writer);
}

int finish_run(const RunReport& report, const ExperimentConfig& cfg) {
  write_run(report, cfg.output_dir);
  for (const auto& a : report.assertions) {
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << " (" << a.detail << ")\n";
  }
  std::cout << "wrote " << report.rows.size() << " rows to " << cfg.output_dir.string() << "\n";
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective classification gap toolkit"};
  app.require_subcommand(1);

  Common c;
  int n = 0;
  double sigma = -1.0;
  auto* gen = app.add_subcommand("gen-data", "Sample a synthetic dataset with posteriors");
  add_common(gen, c, true);
  gen->add_option("--n", n, "Number of samples (defaults to n_samples)");
  gen->add_option("--sigma", sigma, "Two-moons noise level (defaults to the config)");

  std::string data_path, model_kind = "mlp", hidden = "32,32";
  auto* tr = app.add_subcommand("train", "Train a logistic model or MLP on a dataset CSV");
  add_common(tr, c, true);
  tr->add_option("--data", data_path, "Training dataset CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--model", model_kind, "logistic or mlp")->check(CLI::IsMember({"logistic", "mlp"}));
  tr->add_option("--hidden", hidden, "Comma-separated hidden widths for the MLP");

  std::string model_path, scored_path;
  double temperature = 1.0;
  auto* cv = app.add_subcommand("curve", "Accuracy-coverage and gap curve of a scored set");
  add_common(cv, c, false);
  cv->add_option("--model", model_path, "Model file (MSP score)");
  cv->add_option("--data", data_path, "Evaluation dataset CSV");
  cv->add_option("--scored", scored_path, "Pre-scored CSV (score,correct) instead of model + data");
  cv->add_option("--temperature", temperature, "Temperature for the MSP score")->check(CLI::PositiveNumber);

  auto* dc = app.add_subcommand("decompose", "Per-coverage gap decomposition");
  add_common(dc, c, false);
  dc->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  dc->add_option("--data", data_path, "Dataset CSV with posterior columns")->required()->check(CLI::ExistingFile);

  std::string val_path, method = "temperature";
  auto* cal = app.add_subcommand("calibrate", "Fit a calibrator and report reliability");
  add_common(cal, c, false);
  cal->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  cal->add_option("--val", val_path, "Validation dataset CSV")->required()->check(CLI::ExistingFile);
  cal->add_option("--data", data_path, "Test dataset CSV")->required()->check(CLI::ExistingFile);
  cal->add_option("--method", method, "temperature, isotonic or histogram")
      ->check(CLI::IsMember({"temperature", "isotonic", "histogram"}));

  std::string holdout_path, mode = "input_aware";
  auto* lp = app.add_subcommand("loss-pred", "Train a loss predictor and trace its advantage");
  add_common(lp, c, true);
  lp->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  lp->add_option("--holdout", holdout_path, "Held-out dataset CSV for fitting")->required()->check(CLI::ExistingFile);
  lp->add_option("--data", data_path, "Test dataset CSV")->required()->check(CLI::ExistingFile);
  lp->add_option("--mode", mode, "prediction_only, input_aware or representation_aware")
      ->check(CLI::IsMember({"prediction_only", "input_aware", "representation_aware"}));

  auto* sn = app.add_subcommand("sweep-noise", "E-AURC across two-moons noise levels");
  add_common(sn, c, false);
  auto* sc = app.add_subcommand("sweep-capacity", "E-AURC across model specs");
  add_common(sc, c, false);
  auto* cs = app.add_subcommand("calibration-study", "MSP vs TEMP vs ISO vs HIST vs DE");
  add_common(cs, c, false);
  auto* ss = app.add_subcommand("shift-study", "E-AURC and MMD under covariate shifts");
  add_common(ss, c, false);

  std::vector<std::string> runs;
  std::string report_out;
  auto* rp = app.add_subcommand("report", "Merge run directories and emit gap-curve plot data");
  rp->add_option("--runs", runs, "Run directories")->required();
  rp->add_option("--out", report_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto cfg = load_config(c);
      const auto seed = cfg.seeds.front();
      const std::size_t count = n > 0 ? static_cast<std::size_t>(n) : cfg.n_samples;
      LabeledDataset data;
      if (cfg.task == TaskKind::two_moons) {
        if (sigma >= 0.0) cfg.moons.noise_sigma = sigma;
        data = sample_two_moons(cfg.moons, count, seed);
        data = estimate_posterior_grid(data, cfg.moons, cfg.mc_samples, seed).annotate(std::move(data));
      } else {
        data = sample_gaussian_task(cfg.gaussian, count, seed);
      }
      emit(c.out, [&](std::ostream& o) { write_dataset_csv(data, o); });
      return 0;
    }
    if (tr->parsed()) {
      const auto cfg = load_config(c);
      const auto data = load_dataset(data_path);
      ModelSpec spec = ModelSpec::logistic(data.dim, data.num_classes);
      if (model_kind == "mlp") {
        std::vector<std::size_t> widths;
        for (const auto& w : split_csv_line(hidden)) widths.push_back(std::stoul(w));
        spec = ModelSpec::mlp(data.dim, widths, data.num_classes);
      }
      TrainConfig t = cfg.train;
      t.seed = cfg.seeds.front();
      const auto model = train(spec, t, data);
      emit(c.out, [&](std::ostream& o) { model.save(o); });
      std::cerr << spec.describe() << " final loss " << model.loss_trace().back() << "\n";
      return 0;
    }
    if (cv->parsed()) {
      std::vector<ScoredSample> scored;
      if (!scored_path.empty()) {
        std::istringstream in(read_file(scored_path));
        scored = read_scored_csv(in);
      } else {
        if (model_path.empty() || data_path.empty()) throw std::invalid_argument("curve needs --scored or --model and --data");
        const SelectivePair pair{Predictor(load_model(model_path)), ScoreFunction::msp(temperature)};
        scored = score_dataset(pair, load_dataset(data_path));
      }
      const auto curve = empirical_curve(scored);
      emit(c.out, [&](std::ostream& o) { write_gap_csv(curve, gap_curve(curve), o); });
      return 0;
    }
    if (dc->parsed()) {
      const auto cfg = load_config(c);
      const auto data = load_dataset(data_path);
      const SelectivePair pair{Predictor(load_model(model_path)), ScoreFunction::msp()};
      const auto dec = decompose(data, pair, cfg.coverage_grid, cfg.delta);
      emit(c.out, [&](std::ostream& o) { write_decomposition_csv(dec, o); });
      std::cerr << dec.violations() << " of " << dec.rows.size() << " rows exceed the bound\n";
      return 0;
    }
    if (cal->parsed()) {
      const auto cfg = load_config(c);
      const auto model = load_model(model_path);
      const auto val = load_dataset(val_path);
      const auto test = load_dataset(data_path);
      const auto conf_correct = [&](const LabeledDataset& d, double t) {
        std::pair<std::vector<double>, std::vector<double>> out;
        for (std::size_t i = 0; i < d.size(); ++i) {
          const auto p = softmax(model->logits(d.x(i)), t);
          out.first.push_back(max_probability(p));
          const auto pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
          out.second.push_back(pred == d.labels[i] ? 1.0 : 0.0);
        }
        return out;
      };
      auto [test_conf, test_correct] = conf_correct(test, 1.0);
      std::vector<double> calibrated;
      if (method == "temperature") {
        std::vector<double> logits;
        for (std::size_t i = 0; i < val.size(); ++i) {
          const auto z = model->logits(val.x(i));
          logits.insert(logits.end(), z.begin(), z.end());
        }
        const auto fit = fit_temperature(logits, val.num_classes, val.labels);
        if (fit.warning) std::cerr << "warning: " << *fit.warning << "\n";
        std::cerr << "temperature " << fit.calibrator.temperature_value() << "\n";
        calibrated = conf_correct(test, fit.calibrator.temperature_value()).first;
      } else {
        const auto [val_conf, val_correct] = conf_correct(val, 1.0);
        const auto calib = method == "isotonic" ? fit_isotonic(val_conf, val_correct)
                                                : fit_histogram(val_conf, val_correct, cfg.ece_bins);
        for (double s : test_conf) calibrated.push_back(calib.apply(s));
      }
      const auto before = ece(test_conf, test_correct, cfg.ece_bins);
      const auto after = ece(calibrated, test_correct, cfg.ece_bins);
      std::cerr << "ece " << before.ece << " -> " << after.ece << "\n";
      emit(c.out, [&](std::ostream& o) { write_reliability_csv(after, o); });
      return 0;
    }
    if (lp->parsed()) {
      const auto cfg = load_config(c);
      const Predictor predictor(load_model(model_path));
      const auto feature_mode = feature_mode_from_string(mode);
      const auto holdout = build_loss_features(predictor, load_dataset(holdout_path), feature_mode);
      const auto test_data = load_dataset(data_path);
      const auto test = build_loss_features(predictor, test_data, feature_mode);
      LossPredictorConfig lpc;
      lpc.train.seed = cfg.seeds.front();
      const auto trace = advantage_trace(holdout, test, feature_mode, lpc);
      const fs::path out(c.out);
      fs::create_directories(out);
      write_file_atomic(out / "advantage.csv", [&](std::ostream& o) { write_advantage_csv(trace, o); });
      if (test_data.has_eta()) {
        const SelectivePair pair{predictor, ScoreFunction::msp()};
        const auto rows = corollary_check(test_data, pair, cfg.coverage_grid);
        write_file_atomic(out / "corollary.csv", [&](std::ostream& o) {
          o << "coverage,eps_rank,adv_star,adv_star_se,bound,holds\n";
          for (const auto& r : rows) {
            o << format_real(r.coverage) << ',' << format_real(r.eps_rank) << ','
              << format_real(r.adv_star) << ',' << format_real(r.adv_star_se) << ','
              << format_real(r.bound) << ',' << (r.holds ? 1 : 0) << '\n';
          }
        });
        std::vector<int> predicted;
        std::vector<double> conf, residual;
        for (std::size_t i = 0; i < test_data.size(); ++i) {
          predicted.push_back(predictor.label(test_data.x(i)));
          conf.push_back(1.0 - test.sep[i]);
          residual.push_back((1.0 - test.losses[i]) - conf.back());
        }
        const auto eta_h = correctness_posteriors(test_data, predicted);
        const auto weights = default_weight_class(test.values, test.dim, conf, eta_h, cfg.coverage_grid);
        write_file_atomic(out / "mce.csv", [&](std::ostream& o) {
          o << "members,mce\n" << weights.size() << ',' << format_real(mce(residual, weights)) << '\n';
        });
      }
      std::cerr << "final test advantage " << trace.back().adv_test << "\n";
      return 0;
    }
    if (sn->parsed()) { const auto cfg = load_config(c); return finish_run(cmd_sweep_noise(cfg), cfg); }
    if (sc->parsed()) { const auto cfg = load_config(c); return finish_run(cmd_sweep_capacity(cfg), cfg); }
    if (cs->parsed()) { const auto cfg = load_config(c); return finish_run(cmd_calibration_study(cfg), cfg); }
    if (ss->parsed()) { const auto cfg = load_config(c); return finish_run(cmd_shift_study(cfg), cfg); }
    if (rp->parsed()) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      cmd_report(dirs, report_out);
      std::cout << "merged " << dirs.size() << " runs into " << report_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
