#include "selgap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "selgap/calibration.hpp"
#include "selgap/csv.hpp"
#include "selgap/curves.hpp"
#include "selgap/decomposition.hpp"
#include "selgap/random.hpp"
#include "selgap/scoring.hpp"

namespace selgap {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kOracleStream = 4;
constexpr std::uint64_t kEnsembleStream = 5;

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string sanitize(const std::string& key) {
  std::string out;
  for (char ch : key) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '=' ||
                      ch == '-' || ch == '_';
    out.push_back(keep ? ch : '_');
  }
  return out;
}

struct SeedData {
  Split split;
  LabeledDataset train, val, test;
};

SeedData prepare(const ExperimentConfig& c, TaskKind task, const TwoMoonsTask& moons,
                 std::uint64_t seed) {
  LabeledDataset data;
  if (task == TaskKind::two_moons) {
    data = sample_two_moons(moons, c.n_samples, derive_seed(seed, kDataStream));
    const auto oracle =
        estimate_posterior_grid(data, moons, c.mc_samples, derive_seed(seed, kOracleStream));
    data = oracle.annotate(std::move(data));
  } else {
    data = sample_gaussian_task(c.gaussian, c.n_samples, derive_seed(seed, kDataStream));
  }
  SeedData s;
  s.split = make_split(data.size(), c.train_fraction, c.val_fraction, derive_seed(seed, kSplitStream));
  s.train = data.subset(s.split.train);
  s.val = data.subset(s.split.val);
  s.test = data.subset(s.split.test);
  return s;
}

ModelSpec fit_spec(ModelSpec spec, const LabeledDataset& data) {
  spec.input_dim = data.dim;
  spec.num_classes = data.num_classes;
  return spec;
}

TrainConfig seeded(TrainConfig t, std::uint64_t seed, std::uint64_t stream) {
  t.seed = derive_seed(seed, stream);
  return t;
}

CurveDump split_dump(const Split& s, std::uint64_t seed) {
  std::ostringstream out;
  out << "split,index\n";
  for (auto i : s.train) out << "train," << i << '\n';
  for (auto i : s.val) out << "val," << i << '\n';
  for (auto i : s.test) out << "test," << i << '\n';
  return {"split__seed" + std::to_string(seed) + ".csv", out.str()};
}

struct Evaluated {
  MetricRow row;
  CurveDump curve;
};

// Curve, ECE and grid-averaged decomposition of one scored test set.
Evaluated evaluate(const ExperimentConfig& c, const std::string& key, std::uint64_t seed,
                   const LabeledDataset& test, std::span<const int> predicted,
                   std::span<const double> scores, std::span<const double> confidences) {
  const std::size_t n = test.size();
  std::vector<ScoredSample> scored(n);
  std::vector<double> correct(n);
  for (std::size_t i = 0; i < n; ++i) {
    scored[i] = {scores[i], predicted[i] == test.labels[i]};
    correct[i] = scored[i].correct ? 1.0 : 0.0;
  }
  const auto curve = empirical_curve(scored);
  const auto gap = gap_curve(curve);
  const auto dec = decompose(test, predicted, scores, c.coverage_grid, c.delta);

  Evaluated e;
  MetricRow& r = e.row;
  r.experiment = c.name;
  r.config_key = key;
  r.config_hash = c.hash();
  r.seed = seed;
  r.a_full = curve.a_full;
  r.aurc = aurc(curve);
  r.e_aurc = gap.e_aurc;
  r.ece = ece(confidences, correct, c.ece_bins).ece;
  const auto m = static_cast<double>(dec.rows.size());
  std::size_t holds = 0;
  r.eps_bayes = r.eps_approx = r.eps_rank = r.d_rank = r.eps_misc = 0.0;
  for (const auto& d : dec.rows) {
    r.eps_bayes += d.eps_bayes / m;
    r.eps_approx += d.eps_approx / m;
    r.eps_rank += d.eps_rank / m;
    r.d_rank += d.d_rank / m;
    r.eps_misc += d.eps_misc / m;
    holds += d.holds ? 1 : 0;
  }
  r.holds_fraction = static_cast<double>(holds) / m;

  std::ostringstream out;
  write_gap_csv(curve, gap, out);
  e.curve = {"gap__" + sanitize(key) + "__seed" + std::to_string(seed) + ".csv", out.str()};
  return e;
}

struct Outputs {
  std::vector<int> predicted;
  std::vector<double> confidence;
  std::vector<double> logits;  // single models only
};

Outputs model_outputs(const TrainedModel& model, const LabeledDataset& data, double temperature = 1.0) {
  Outputs o;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto z = model.logits(data.x(i));
    const auto p = softmax(z, temperature);
    o.predicted.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    o.confidence.push_back(max_probability(p));
    o.logits.insert(o.logits.end(), z.begin(), z.end());
  }
  return o;
}

Outputs ensemble_outputs(const Ensemble& ensemble, const LabeledDataset& data) {
  Outputs o;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = ensemble.predict_proba(data.x(i));
    o.predicted.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    o.confidence.push_back(max_probability(p));
  }
  return o;
}

double reference_slack(const TrainedModel& model, const LabeledDataset& train) {
  return optimization_slack(model, train, reference_logistic_loss(train));
}

struct SeedResult {
  std::vector<Evaluated> evaluated;
  std::vector<CurveDump> extra;
  CurveDump split;
};

template <typename Fn>
RunReport run_seeds(const ExperimentConfig& c, Fn per_seed) {
  std::vector<std::future<SeedResult>> jobs;
  for (auto seed : c.seeds) {
    jobs.push_back(std::async(std::launch::async, [&c, &per_seed, seed] { return per_seed(seed); }));
  }
  std::vector<SeedResult> results;
  for (auto& j : jobs) results.push_back(j.get());

  RunReport report;
  report.experiment = c.name;
  report.config_hash = c.hash();
  report.config_json = c.to_json();
  std::vector<std::string> keys;
  for (const auto& e : results.front().evaluated) keys.push_back(e.row.config_key);
  for (const auto& key : keys) {
    for (const auto& res : results) {
      for (const auto& e : res.evaluated) {
        if (e.row.config_key != key) continue;
        report.rows.push_back(e.row);
        report.curves.push_back(e.curve);
      }
    }
  }
  for (auto& res : results) {
    report.curves.insert(report.curves.end(), res.extra.begin(), res.extra.end());
    report.splits.push_back(res.split);
  }
  return report;
}

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  const auto n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

// Mean of a minus mean of b, with the two standard errors combined.
MeanSe difference(const RunReport& r, const std::string& a, const std::string& b,
                  double MetricRow::*field) {
  const auto sa = summarize(r.rows_for(a), field);
  const auto sb = summarize(r.rows_for(b), field);
  return {sa.mean - sb.mean, std::sqrt(sa.se * sa.se + sb.se * sb.se)};
}

std::string describe(const MeanSe& m) {
  return "difference " + format_real(m.mean) + " se " + format_real(m.se);
}

// a <= b within two standard errors.
TrendAssertion at_most(const RunReport& r, const std::string& name, const std::string& a,
                       const std::string& b, double MetricRow::*field) {
  const auto d = difference(r, a, b, field);
  return {name, d.mean <= 2.0 * d.se, describe(d)};
}

// a < b separated by more than two standard errors.
TrendAssertion below(const RunReport& r, const std::string& name, const std::string& a,
                     const std::string& b, double MetricRow::*field) {
  const auto d = difference(r, b, a, field);
  return {name, d.mean > 2.0 * d.se, describe(d)};
}

std::vector<std::size_t> msp_prefix_mass(std::span<const double> a, std::span<const double> b) {
  const auto oa = acceptance_order(a);
  const auto ob = acceptance_order(b);
  std::vector<char> in_b(a.size(), 0);
  std::vector<char> in_a(a.size(), 0);
  std::vector<std::size_t> mass(a.size());
  std::size_t only_a = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    in_a[oa[k]] = 1;
    if (!in_b[oa[k]]) ++only_a;
    in_b[ob[k]] = 1;
    if (in_a[ob[k]]) --only_a;
    mass[k] = only_a;
  }
  return mass;
}

}  // namespace

double swap_mass_bound(std::span<const double> a, std::span<const double> b) {
  const auto mass = msp_prefix_mass(a, b);
  std::vector<double> values(mass.size());
  for (std::size_t k = 0; k < mass.size(); ++k) {
    values[k] = static_cast<double>(mass[k]) / static_cast<double>(k + 1);
  }
  return integrate_prefix_grid(values);
}

bool RunReport::ok() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.passed; });
}

std::vector<MetricRow> RunReport::rows_for(const std::string& key) const {
  std::vector<MetricRow> out;
  for (const auto& r : rows) {
    if (r.config_key == key) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  return out;
}

MeanSe summarize(const std::vector<MetricRow>& rows, double MetricRow::*field) {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.*field);
  return mean_se(v);
}

RunReport cmd_sweep_noise(const ExperimentConfig& config) {
  config.validate();
  if (config.task != TaskKind::two_moons) throw std::invalid_argument("sweep-noise needs the two_moons task");
  if (config.noise_levels.empty()) throw std::invalid_argument("sweep-noise needs noise levels");
  const auto& named = config.models.front();

  auto report = run_seeds(config, [&](std::uint64_t seed) {
    SeedResult res;
    for (double sigma : config.noise_levels) {
      TwoMoonsTask moons = config.moons;
      moons.noise_sigma = sigma;
      const auto d = prepare(config, TaskKind::two_moons, moons, seed);
      const auto model = train(fit_spec(named.spec, d.train), seeded(config.train, seed, kTrainStream), d.train);
      const auto out = model_outputs(model, d.test);
      auto e = evaluate(config, "sigma=" + short_real(sigma), seed, d.test, out.predicted,
                        out.confidence, out.confidence);
      e.row.eps_opt = reference_slack(model, d.train);
      res.evaluated.push_back(std::move(e));
      if (res.split.file_name.empty()) res.split = split_dump(d.split, seed);
    }
    return res;
  });

  std::vector<double> means;
  std::string detail;
  for (double sigma : config.noise_levels) {
    means.push_back(summarize(report.rows_for("sigma=" + short_real(sigma)), &MetricRow::e_aurc).mean);
    detail += (detail.empty() ? "" : " ") + short_real(sigma) + ":" + format_real(means.back());
  }
  const bool monotone = std::is_sorted(means.begin(), means.end());
  report.assertions.push_back({"e_aurc nondecreasing in sigma", monotone, detail});
  return report;
}

RunReport cmd_sweep_capacity(const ExperimentConfig& config) {
  config.validate();
  auto report = run_seeds(config, [&](std::uint64_t seed) {
    SeedResult res;
    const auto d = prepare(config, config.task, config.moons, seed);
    res.split = split_dump(d.split, seed);
    for (const auto& named : config.models) {
      const auto model = train(fit_spec(named.spec, d.train), seeded(config.train, seed, kTrainStream), d.train);
      const auto out = model_outputs(model, d.test);
      auto e = evaluate(config, named.name, seed, d.test, out.predicted, out.confidence, out.confidence);
      e.row.eps_opt = reference_slack(model, d.train);
      res.evaluated.push_back(std::move(e));
    }
    return res;
  });

  if (config.models.size() >= 2) {
    const auto by_size = [](const NamedModel& a, const NamedModel& b) {
      return a.spec.weight_count() < b.spec.weight_count();
    };
    const auto small = *std::min_element(config.models.begin(), config.models.end(), by_size);
    const auto large = *std::max_element(config.models.begin(), config.models.end(), by_size);
    if (small.name != large.name) {
      report.assertions.push_back(below(report, large.name + " e_aurc below " + small.name,
                                        large.name, small.name, &MetricRow::e_aurc));
    }
  }
  return report;
}

RunReport cmd_calibration_study(const ExperimentConfig& config) {
  config.validate();
  const auto& named = config.models.front();
  const bool with_ensemble = config.ensemble_size >= 2;

  auto report = run_seeds(config, [&](std::uint64_t seed) {
    SeedResult res;
    const auto d = prepare(config, config.task, config.moons, seed);
    res.split = split_dump(d.split, seed);
    if (d.val.empty()) throw std::invalid_argument("calibration-study needs a validation split");
    const auto spec = fit_spec(named.spec, d.train);
    const auto model = train(spec, seeded(config.train, seed, kTrainStream), d.train);
    const double eps_opt = reference_slack(model, d.train);

    const auto val = model_outputs(model, d.val);
    const auto fit = fit_temperature(val.logits, d.val.num_classes, d.val.labels);
    const double t = fit.calibrator.temperature_value();
    std::vector<double> val_correct(d.val.size());
    for (std::size_t i = 0; i < d.val.size(); ++i) val_correct[i] = val.predicted[i] == d.val.labels[i] ? 1.0 : 0.0;

    const auto msp = model_outputs(model, d.test);
    const auto temp = model_outputs(model, d.test, t);

    auto e_msp = evaluate(config, "MSP", seed, d.test, msp.predicted, msp.confidence, msp.confidence);
    e_msp.row.eps_opt = eps_opt;
    auto e_temp = evaluate(config, "TEMP", seed, d.test, temp.predicted, temp.confidence, temp.confidence);
    e_temp.row.eps_opt = eps_opt;
    e_temp.row.swap_bound = swap_mass_bound(msp.confidence, temp.confidence);
    res.evaluated.push_back(std::move(e_msp));
    res.evaluated.push_back(std::move(e_temp));

    const auto iso = fit_isotonic(val.confidence, val_correct);
    const auto hist = fit_histogram(val.confidence, val_correct, config.ece_bins);
    std::vector<double> iso_conf, hist_conf;
    for (double s : msp.confidence) {
      iso_conf.push_back(iso.apply(s));
      hist_conf.push_back(hist.apply(s));
    }
    for (auto [key, conf] : {std::pair{"ISO", &iso_conf}, std::pair{"HIST", &hist_conf}}) {
      auto e = evaluate(config, key, seed, d.test, msp.predicted, *conf, *conf);
      e.row.eps_opt = eps_opt;
      res.evaluated.push_back(std::move(e));
    }

    if (with_ensemble) {
      const auto ens = train_ensemble(spec, seeded(config.train, seed, kEnsembleStream), d.train,
                                      config.ensemble_size);
      const auto de = ensemble_outputs(ens, d.test);
      res.evaluated.push_back(evaluate(config, "DE", seed, d.test, de.predicted, de.confidence, de.confidence));
    }

    // Pairwise swap detector between T = 1 and the fitted temperature.
    std::ostringstream swaps;
    swaps << "i,j,t_lo,t_hi\n";
    const std::size_t m = std::min(config.swap_subsample, d.test.size());
    const std::size_t k = d.test.num_classes;
    if (t != 1.0) {
      const std::vector<double> grid{std::min(1.0, t), std::max(1.0, t)};
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
          const std::span<const double> zi(msp.logits.data() + i * k, k);
          const std::span<const double> zj(msp.logits.data() + j * k, k);
          for (const auto& c : find_swap_temperatures(zi, zj, grid).crossings) {
            swaps << i << ',' << j << ',' << format_real(c.lo) << ',' << format_real(c.hi) << '\n';
          }
        }
      }
    }
    res.extra.push_back({"swaps__seed" + std::to_string(seed) + ".csv", swaps.str()});
    return res;
  });

  report.assertions.push_back(at_most(report, "TEMP ece <= MSP ece", "TEMP", "MSP", &MetricRow::ece));
  bool within = true;
  std::string detail;
  const auto msp = report.rows_for("MSP");
  const auto temp = report.rows_for("TEMP");
  for (std::size_t i = 0; i < msp.size(); ++i) {
    const double diff = std::abs(temp[i].e_aurc - msp[i].e_aurc);
    within = within && diff <= temp[i].swap_bound + 1e-12;
    detail += (detail.empty() ? "" : " ") + std::string("seed") + std::to_string(msp[i].seed) + ":" +
              format_real(diff) + "<=" + format_real(temp[i].swap_bound);
  }
  report.assertions.push_back({"TEMP e_aurc change within swap-mass bound", within, detail});
  if (with_ensemble) {
    report.assertions.push_back(at_most(report, "DE e_aurc <= MSP e_aurc", "DE", "MSP", &MetricRow::e_aurc));
  }
  return report;
}

RunReport cmd_shift_study(const ExperimentConfig& config) {
  config.validate();
  std::vector<ShiftTransform> shifts{ShiftTransform::identity()};
  const auto& listed = config.shifts.empty()
                           ? std::vector<ShiftTransform>{ShiftTransform::shear(), ShiftTransform::rotation(),
                                                         ShiftTransform::translation()}
                           : config.shifts;
  for (const auto& s : listed) {
    if (s.kind != ShiftKind::identity) shifts.push_back(s);
  }
  const auto& named = config.models.front();

  auto report = run_seeds(config, [&](std::uint64_t seed) {
    SeedResult res;
    const auto d = prepare(config, config.task, config.moons, seed);
    res.split = split_dump(d.split, seed);
    const auto model = train(fit_spec(named.spec, d.train), seeded(config.train, seed, kTrainStream), d.train);
    const double eps_opt = reference_slack(model, d.train);
    for (const auto& s : shifts) {
      auto shifted = apply_shift(d.test, s);
      // Labels travel with their points, so the posterior moves with them.
      shifted.eta_true = d.test.eta_true;
      const auto out = model_outputs(model, shifted);
      auto e = evaluate(config, s.name(), seed, shifted, out.predicted, out.confidence, out.confidence);
      e.row.eps_opt = eps_opt;
      e.row.mmd = mmd_rbf(d.test, shifted);
      res.evaluated.push_back(std::move(e));
    }
    return res;
  });

  for (std::size_t i = 1; i < shifts.size(); ++i) {
    const auto name = shifts[i].name();
    report.assertions.push_back(
        at_most(report, name + " e_aurc >= identity", "identity", name, &MetricRow::e_aurc));
    const auto shifted = summarize(report.rows_for(name), &MetricRow::mmd);
    const auto base = summarize(report.rows_for("identity"), &MetricRow::mmd);
    report.assertions.push_back({name + " mmd > identity", shifted.mean > base.mean,
                                 format_real(shifted.mean) + ">" + format_real(base.mean)});
  }
  return report;
}

std::string metric_csv_header() {
  return "experiment,config_key,config_hash,seed,a_full,aurc,e_aurc,ece,eps_bayes,eps_approx,"
         "eps_rank,d_rank,holds_fraction,eps_misc,eps_opt,mmd,swap_bound";
}

namespace {

const std::vector<double MetricRow::*>& metric_fields() {
  static const std::vector<double MetricRow::*> fields{
      &MetricRow::a_full,    &MetricRow::aurc,   &MetricRow::e_aurc,         &MetricRow::ece,
      &MetricRow::eps_bayes, &MetricRow::eps_approx, &MetricRow::eps_rank, &MetricRow::d_rank,
      &MetricRow::holds_fraction, &MetricRow::eps_misc, &MetricRow::eps_opt, &MetricRow::mmd,
      &MetricRow::swap_bound};
  return fields;
}

std::string csv_field(const std::string& s) {
  std::string out;
  for (char ch : s) out.push_back(ch == ',' || ch == '\n' ? ';' : ch);
  return out;
}

void write_row(const MetricRow& r, std::ostream& out) {
  out << csv_field(r.experiment) << ',' << csv_field(r.config_key) << ',' << r.config_hash << ','
      << r.seed;
  for (auto f : metric_fields()) out << ',' << format_real(r.*f);
  out << '\n';
}

MetricRow parse_row(const std::string& line) {
  const auto f = split_csv_line(line);
  if (f.size() != 4 + metric_fields().size()) throw std::runtime_error("wrong field count");
  MetricRow r;
  r.experiment = f[0];
  r.config_key = f[1];
  r.config_hash = f[2];
  r.seed = std::stoull(f[3]);
  for (std::size_t k = 0; k < metric_fields().size(); ++k) r.*(metric_fields()[k]) = std::stod(f[4 + k]);
  return r;
}

}  // namespace

void write_run(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir / "curves");
  fs::create_directories(dir / "splits");
  write_file_atomic(dir / "report.csv", [&](std::ostream& out) {
    out << metric_csv_header() << '\n';
    for (const auto& r : report.rows) write_row(r, out);
  });
  write_file_atomic(dir / "assertions.csv", [&](std::ostream& out) {
    out << "name,passed,detail\n";
    for (const auto& a : report.assertions) {
      out << csv_field(a.name) << ',' << (a.passed ? 1 : 0) << ',' << csv_field(a.detail) << '\n';
    }
  });
  write_file_atomic(dir / "config.json", [&](std::ostream& out) { out << report.config_json; });
  for (const auto& c : report.curves) {
    write_file_atomic(dir / "curves" / c.file_name, [&](std::ostream& out) { out << c.contents; });
  }
  for (const auto& s : report.splits) {
    write_file_atomic(dir / "splits" / s.file_name, [&](std::ostream& out) { out << s.contents; });
  }
}

void cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw std::invalid_argument("report: no run directories given");
  std::vector<std::string> errors;
  std::vector<MetricRow> rows;
  struct Accumulated {
    std::vector<std::array<double, 4>> sum;
    std::size_t count = 0;
  };
  std::map<std::pair<std::string, std::string>, Accumulated> curves;

  for (const auto& dir : run_dirs) {
    const auto report_path = dir / "report.csv";
    std::string hash;
    try {
      std::istringstream in(read_file(report_path));
      std::string line;
      if (!std::getline(in, line) || line != metric_csv_header()) throw std::runtime_error("bad header");
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(parse_row(line));
        hash = rows.back().config_hash;
      }
    } catch (const std::exception& e) {
      errors.push_back(report_path.string() + ": " + e.what());
      continue;
    }
    const auto curve_dir = dir / "curves";
    if (!fs::is_directory(curve_dir)) {
      errors.push_back(curve_dir.string() + ": missing");
      continue;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(curve_dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      const auto name = path.filename().string();
      const auto seed_pos = name.rfind("__seed");
      if (name.rfind("gap__", 0) != 0 || seed_pos == std::string::npos) continue;
      const auto key = name.substr(5, seed_pos - 5);
      try {
        std::istringstream in(read_file(path));
        std::string line;
        std::getline(in, line);
        if (line != "coverage,oracle,realized,gap") throw std::runtime_error("bad header");
        std::vector<std::array<double, 4>> points;
        while (std::getline(in, line)) {
          const auto f = split_csv_line(line);
          if (f.size() == 2) continue;  // footer
          if (f.size() != 4) throw std::runtime_error("wrong field count");
          points.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
        }
        auto& acc = curves[{hash, key}];
        if (acc.count == 0) acc.sum.assign(points.size(), {0.0, 0.0, 0.0, 0.0});
        if (acc.sum.size() != points.size()) throw std::runtime_error("curve length differs between seeds");
        for (std::size_t i = 0; i < points.size(); ++i) {
          for (std::size_t k = 0; k < 4; ++k) acc.sum[i][k] += points[i][k];
        }
        ++acc.count;
      } catch (const std::exception& e) {
        errors.push_back(path.string() + ": " + e.what());
      }
    }
  }
  if (!errors.empty()) {
    std::string msg = "report: unreadable run outputs:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::runtime_error(msg);
  }

  fs::create_directories(out_dir);
  write_file_atomic(out_dir / "report.csv", [&](std::ostream& out) {
    out << metric_csv_header() << '\n';
    for (const auto& r : rows) write_row(r, out);
  });
  for (const auto& [id, acc] : curves) {
    const auto file = out_dir / ("gap_curve__" + id.first + "__" + id.second + ".csv");
    write_file_atomic(file, [&](std::ostream& out) {
      out << "coverage,oracle,realized,gap\n";
      const auto n = static_cast<double>(acc.count);
      for (const auto& p : acc.sum) {
        out << format_real(p[0] / n) << ',' << format_real(p[1] / n) << ',' << format_real(p[2] / n)
            << ',' << format_real(p[3] / n) << '\n';
      }
    });
  }
}

}  // namespace selgap
