#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "selgap/curves.hpp"
#include "selgap/harness.hpp"
#include "selgap/random.hpp"

namespace selgap {

using nlohmann::json;

namespace {

const char* task_name(TaskKind t) { return t == TaskKind::two_moons ? "two_moons" : "gaussian"; }

TaskKind task_from(const std::string& s) {
  if (s == "two_moons") return TaskKind::two_moons;
  if (s == "gaussian") return TaskKind::gaussian;
  throw std::invalid_argument("config: unknown task '" + s + "'");
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json model_to_json(const NamedModel& m) {
  return {{"name", m.name},
          {"kind", m.spec.kind == ModelKind::logistic ? "logistic" : "mlp"},
          {"hidden_sizes", m.spec.hidden_sizes},
          {"activation", "relu"}};
}

NamedModel model_from_json(const json& j) {
  reject_unknown(j, {"name", "kind", "hidden_sizes", "activation"}, "models[]");
  const auto kind = j.value("kind", std::string("mlp"));
  if (j.contains("activation") && j.at("activation") != "relu") {
    throw std::invalid_argument("config: only relu activations are supported");
  }
  NamedModel m;
  m.name = j.value("name", kind);
  if (kind == "logistic") {
    m.spec = ModelSpec::logistic(2, 2);
  } else if (kind == "mlp") {
    m.spec = ModelSpec::mlp(2, j.value("hidden_sizes", std::vector<std::size_t>{32, 32}), 2);
  } else {
    throw std::invalid_argument("config: unknown model kind '" + kind + "'");
  }
  return m;
}

json shift_to_json(const ShiftTransform& s) {
  return {{"kind", s.name()},
          {"matrix", std::vector<double>(s.matrix.begin(), s.matrix.end())},
          {"offset", std::vector<double>(s.offset.begin(), s.offset.end())}};
}

ShiftTransform shift_from_json(const json& j) {
  if (j.is_string()) {
    const auto k = j.get<std::string>();
    if (k == "identity") return ShiftTransform::identity();
    if (k == "shear") return ShiftTransform::shear();
    if (k == "rotation") return ShiftTransform::rotation();
    if (k == "translation") return ShiftTransform::translation();
    throw std::invalid_argument("config: unknown shift '" + k + "'");
  }
  reject_unknown(j, {"kind", "factor", "radians", "offset", "matrix"}, "shifts[]");
  const auto k = j.at("kind").get<std::string>();
  ShiftTransform s;
  if (k == "identity") s = ShiftTransform::identity();
  else if (k == "shear") s = ShiftTransform::shear(j.value("factor", 1.25));
  else if (k == "rotation") s = ShiftTransform::rotation(j.value("radians", 3.14159265358979323846 / 6.0));
  else if (k == "translation") s = ShiftTransform::translation();
  else throw std::invalid_argument("config: unknown shift '" + k + "'");
  if (j.contains("matrix")) {
    const auto m = j.at("matrix").get<std::vector<double>>();
    if (m.size() != 4) throw std::invalid_argument("config: shift matrix needs 4 entries");
    std::copy(m.begin(), m.end(), s.matrix.begin());
  }
  if (j.contains("offset")) {
    const auto o = j.at("offset").get<std::vector<double>>();
    if (o.size() != 2) throw std::invalid_argument("config: shift offset needs 2 entries");
    std::copy(o.begin(), o.end(), s.offset.begin());
  }
  return s;
}

json canonical(const ExperimentConfig& c) {
  json means = json::array();
  for (const auto& m : c.gaussian.means) means.push_back({m[0], m[1]});
  json models = json::array();
  for (const auto& m : c.models) models.push_back(model_to_json(m));
  json shifts = json::array();
  for (const auto& s : c.shifts) shifts.push_back(shift_to_json(s));
  return {
      {"name", c.name},
      {"task", task_name(c.task)},
      {"moons", {{"noise_sigma", c.moons.noise_sigma}, {"n_grid", c.moons.n_grid}}},
      {"gaussian",
       {{"means", means},
        {"covariance", std::vector<double>(c.gaussian.covariance.begin(), c.gaussian.covariance.end())},
        {"priors", c.gaussian.priors}}},
      {"noise_levels", c.noise_levels},
      {"models", models},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"weight_decay", c.train.weight_decay},
        {"momentum", c.train.momentum}}},
      {"n_samples", c.n_samples},
      {"train_fraction", c.train_fraction},
      {"val_fraction", c.val_fraction},
      {"seeds", c.seeds},
      {"delta", c.delta},
      {"coverage_grid", c.coverage_grid},
      {"shifts", shifts},
      {"ensemble_size", c.ensemble_size},
      {"ece_bins", c.ece_bins},
      {"mc_samples", c.mc_samples},
      {"swap_subsample", c.swap_subsample},
  };
}

}  // namespace

std::vector<double> default_coverage_grid() { return uniform_grid(20); }

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(j,
                 {"name", "task", "moons", "gaussian", "noise_levels", "models", "train", "n_samples",
                  "train_fraction", "val_fraction", "seeds", "delta", "coverage_grid", "shifts",
                  "ensemble_size", "ece_bins", "mc_samples", "swap_subsample", "output_dir"},
                 "top level");
  ExperimentConfig c;
  try {
    read_if(j, "name", c.name);
    if (j.contains("task")) c.task = task_from(j.at("task").get<std::string>());
    if (j.contains("moons")) {
      const auto& m = j.at("moons");
      reject_unknown(m, {"noise_sigma", "n_grid"}, "moons");
      read_if(m, "noise_sigma", c.moons.noise_sigma);
      read_if(m, "n_grid", c.moons.n_grid);
    }
    if (j.contains("gaussian")) {
      const auto& g = j.at("gaussian");
      reject_unknown(g, {"means", "covariance", "priors"}, "gaussian");
      if (g.contains("means")) {
        c.gaussian.means.clear();
        for (const auto& m : g.at("means")) {
          const auto v = m.get<std::vector<double>>();
          if (v.size() != 2) throw std::invalid_argument("config: gaussian means are 2-vectors");
          c.gaussian.means.push_back({v[0], v[1]});
        }
        c.gaussian.priors.assign(c.gaussian.means.size(),
                                 1.0 / static_cast<double>(c.gaussian.means.size()));
      }
      if (g.contains("covariance")) {
        const auto v = g.at("covariance").get<std::vector<double>>();
        if (v.size() != 4) throw std::invalid_argument("config: covariance needs 4 entries");
        std::copy(v.begin(), v.end(), c.gaussian.covariance.begin());
      }
      read_if(g, "priors", c.gaussian.priors);
    }
    read_if(j, "noise_levels", c.noise_levels);
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(model_from_json(m));
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      reject_unknown(t, {"learning_rate", "epochs", "batch_size", "weight_decay", "momentum"}, "train");
      read_if(t, "learning_rate", c.train.learning_rate);
      read_if(t, "epochs", c.train.epochs);
      read_if(t, "batch_size", c.train.batch_size);
      read_if(t, "weight_decay", c.train.weight_decay);
      read_if(t, "momentum", c.train.momentum);
    }
    read_if(j, "n_samples", c.n_samples);
    read_if(j, "train_fraction", c.train_fraction);
    read_if(j, "val_fraction", c.val_fraction);
    read_if(j, "seeds", c.seeds);
    read_if(j, "delta", c.delta);
    read_if(j, "coverage_grid", c.coverage_grid);
    if (j.contains("shifts")) {
      c.shifts.clear();
      for (const auto& s : j.at("shifts")) c.shifts.push_back(shift_from_json(s));
    }
    read_if(j, "ensemble_size", c.ensemble_size);
    read_if(j, "ece_bins", c.ece_bins);
    read_if(j, "mc_samples", c.mc_samples);
    read_if(j, "swap_subsample", c.swap_subsample);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: wrong value type: ") + e.what());
  }
  c.validate();
  return c;
}

std::string ExperimentConfig::to_json() const {
  auto j = canonical(*this);
  j["output_dir"] = output_dir.string();
  return j.dump(2) + "\n";
}

std::string ExperimentConfig::hash() const {
  const std::string text = canonical(*this).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  if (coverage_grid.empty()) throw std::invalid_argument("config: coverage_grid must be nonempty");
  for (double c : coverage_grid) {
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("config: coverage grid must lie in (0, 1]");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must lie in (0, 1)");
  if (models.empty()) throw std::invalid_argument("config: at least one model is required");
  for (const auto& n : noise_levels) {
    if (!(n > 0.0)) throw std::invalid_argument("config: noise levels must be positive");
  }
  if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) || train_fraction + val_fraction >= 1.0) {
    throw std::invalid_argument("config: split fractions must leave a nonempty test set");
  }
  if (n_samples < 10) throw std::invalid_argument("config: n_samples must be at least 10");
  if (ece_bins == 0) throw std::invalid_argument("config: ece_bins must be positive");
  if (mc_samples == 0) throw std::invalid_argument("config: mc_samples must be positive");
  train.validate();
  if (task == TaskKind::two_moons) moons.validate();
  else gaussian.validate();
  if (output_dir.empty()) throw std::invalid_argument("config: output_dir must be set");
}

Split make_split(std::size_t n, double train_fraction, double val_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) || train_fraction + val_fraction >= 1.0) {
    throw std::invalid_argument("make_split: fractions must leave a nonempty test set");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train + n_val >= n) throw std::invalid_argument("make_split: sample too small");
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
               perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return s;
}

}  // namespace selgap
