#include "selgap/dataset.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "selgap/csv.hpp"

namespace selgap {

void LabeledDataset::validate() const {
  if (dim == 0) throw std::invalid_argument("dataset: feature dimension is 0");
  if (num_classes < 2) throw std::invalid_argument("dataset: need >= 2 classes");
  if (features.size() != labels.size() * dim) {
    throw std::invalid_argument("dataset: feature count does not match labels");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw std::invalid_argument("dataset: label out of range");
    }
  }
  if (!eta_true.empty()) {
    if (eta_true.size() != labels.size() * num_classes) {
      throw std::invalid_argument("dataset: eta_true has the wrong length");
    }
    for (std::size_t i = 0; i < size(); ++i) {
      double total = 0.0;
      for (double p : eta(i)) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw std::invalid_argument("dataset: eta_true entry outside [0,1]");
        }
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("dataset: eta_true row does not sum to 1");
      }
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.seed = seed;
  out.features.reserve(indices.size() * dim);
  out.labels.reserve(indices.size());
  if (has_eta()) out.eta_true.reserve(indices.size() * num_classes);
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("dataset subset index");
    const auto row = x(i);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(labels[i]);
    if (has_eta()) {
      const auto e = eta(i);
      out.eta_true.insert(out.eta_true.end(), e.begin(), e.end());
    }
  }
  return out;
}

PosteriorOracle::PosteriorOracle(std::size_t num_classes, Provenance provenance,
                                 Evaluator evaluator)
    : num_classes_(num_classes),
      provenance_(provenance),
      evaluator_(std::move(evaluator)) {
  if (num_classes_ < 2) throw std::invalid_argument("oracle: need >= 2 classes");
  if (!evaluator_) throw std::invalid_argument("oracle: empty evaluator");
}

void PosteriorOracle::evaluate(std::span<const double> x,
                               std::span<double> out) const {
  if (out.size() != num_classes_) {
    throw std::invalid_argument("oracle: output size mismatch");
  }
  evaluator_(x, out);
}

std::vector<double> PosteriorOracle::operator()(std::span<const double> x) const {
  std::vector<double> out(num_classes_);
  evaluate(x, out);
  return out;
}

LabeledDataset PosteriorOracle::annotate(LabeledDataset data) const {
  if (data.num_classes != num_classes_) {
    throw std::invalid_argument("oracle: class count differs from dataset");
  }
  data.eta_true.assign(data.size() * num_classes_, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    evaluate(data.x(i), {data.eta_true.data() + i * num_classes_, num_classes_});
  }
  return data;
}

void write_dataset_csv(const LabeledDataset& data, std::ostream& out) {
  for (std::size_t d = 0; d < data.dim; ++d) out << 'x' << d << ',';
  out << "label";
  if (data.has_eta()) {
    for (std::size_t k = 0; k < data.num_classes; ++k) out << ",eta" << k;
  }
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x(i)) out << format_real(v) << ',';
    out << data.labels[i];
    if (data.has_eta()) {
      for (double v : data.eta(i)) out << ',' << format_real(v);
    }
    out << '\n';
  }
}

LabeledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset csv: empty input");
  const auto header = split_csv_line(line);
  std::size_t dim = 0, eta_cols = 0, label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "label") {
      label_col = c;
    } else if (h.rfind("eta", 0) == 0) {
      ++eta_cols;
    } else if (h.rfind('x', 0) == 0) {
      ++dim;
    } else {
      throw std::runtime_error("dataset csv: unknown column '" + h + "'");
    }
  }
  if (label_col != dim || dim == 0) {
    throw std::runtime_error("dataset csv: expected x0..x{D-1},label header");
  }
  LabeledDataset data;
  data.dim = dim;
  int max_label = 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("dataset csv: wrong field count on line " +
                               std::to_string(line_no));
    }
    try {
      for (std::size_t d = 0; d < dim; ++d) data.features.push_back(std::stod(fields[d]));
      const int y = std::stoi(fields[dim]);
      data.labels.push_back(y);
      max_label = std::max(max_label, y);
      for (std::size_t k = 0; k < eta_cols; ++k) {
        data.eta_true.push_back(std::stod(fields[dim + 1 + k]));
      }
    } catch (const std::logic_error&) {
      throw std::runtime_error("dataset csv: unparsable value on line " +
                               std::to_string(line_no));
    }
  }
  data.num_classes = eta_cols > 0 ? eta_cols : static_cast<std::size_t>(max_label) + 1;
  data.validate();
  return data;
}

}  // namespace selgap
