#include "cfbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "cfbench/csv.hpp"
#include "cfbench/error.hpp"
#include "cfbench/rng.hpp"

namespace cfbench {

std::string_view to_string(Label label) { return label == Label::fail ? "fail" : "pass"; }

Label parse_label(std::string_view token) {
  std::string lower(token);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "fail") return Label::fail;
  if (lower == "pass") return Label::pass;
  throw Error(fmt::format("invalid label '{}' (expected fail or pass)", token));
}

std::string format_real(double value) {
  if (value == 0.0) return "0";
  return fmt::format("{}", value);
}

Matrix::Matrix(std::size_t rows, std::size_t cols) : data_(rows * cols, 0.0), cols_(cols) {}

Matrix::Matrix(std::vector<double> data, std::size_t cols) : data_(std::move(data)), cols_(cols) {
  if (cols_ == 0 ? !data_.empty() : data_.size() % cols_ != 0) {
    throw Error("matrix data size is not a multiple of the column count");
  }
}

void Matrix::append_row(std::span<const double> values) {
  if (cols_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) throw Error("row width does not match matrix");
  data_.insert(data_.end(), values.begin(), values.end());
}

LabeledDataset::LabeledDataset(Matrix features, std::vector<Label> labels,
                               std::vector<std::string> feature_names,
                               std::vector<std::string> row_ids)
    : features_(std::move(features)), labels_(std::move(labels)), row_ids_(std::move(row_ids)) {
  const std::size_t n = features_.rows();
  const std::size_t p = features_.cols();
  if (n == 0) throw Error("dataset has no rows");
  if (p == 0) throw Error("dataset has no feature columns");
  if (labels_.size() != n) throw Error("label count does not match row count");
  if (feature_names.size() != p) throw Error("feature name count does not match column count");
  if (row_ids_.empty()) {
    row_ids_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) row_ids_.push_back(std::to_string(i));
  } else if (row_ids_.size() != n) {
    throw Error("row id count does not match row count");
  }

  specs_.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    specs_[j].name = std::move(feature_names[j]);
    specs_[j].min = features_(0, j);
    specs_[j].max = features_(0, j);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double v = features_(i, j);
      if (!std::isfinite(v)) throw Error(fmt::format("non-finite value at row {}, column {}", i, j));
      specs_[j].min = std::min(specs_[j].min, v);
      specs_[j].max = std::max(specs_[j].max, v);
    }
  }
}

Instance LabeledDataset::instance(std::size_t i) const {
  const auto r = row(i);
  return Instance(r.begin(), r.end());
}

std::vector<std::string> LabeledDataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(specs_.size());
  for (const auto& s : specs_) names.push_back(s.name);
  return names;
}

std::size_t LabeledDataset::count(Label label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  Matrix m;
  std::vector<Label> labels;
  std::vector<std::string> ids;
  labels.reserve(indices.size());
  ids.reserve(indices.size());
  for (const std::size_t i : indices) {
    if (i >= rows()) throw Error("subset index out of range");
    m.append_row(row(i));
    labels.push_back(labels_[i]);
    ids.push_back(row_ids_[i]);
  }
  if (indices.empty()) throw Error("subset would be empty");
  return LabeledDataset(std::move(m), std::move(labels), feature_names(), std::move(ids));
}

LabeledDataset load_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& expected_columns) {
  CsvReader reader(path);
  const std::size_t label_col = reader.require(kLabelColumn);
  const auto id_col = reader.find(kIdColumn);

  std::vector<std::string> names = expected_columns;
  if (names.empty()) {
    for (const auto& h : reader.header()) {
      if (h != kLabelColumn && h != kIdColumn) names.push_back(h);
    }
  }
  std::vector<std::size_t> cols;
  cols.reserve(names.size());
  for (const auto& name : names) cols.push_back(reader.require(name));

  std::vector<double> values;
  std::vector<Label> labels;
  std::vector<std::string> ids;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t row = reader.row_number();
    if (fields.size() != reader.header().size()) {
      throw Error(fmt::format("{}: row {} has {} fields, header has {}", path.string(), row,
                              fields.size(), reader.header().size()));
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto v = parse_real(fields[cols[k]]);
      if (!v) {
        throw Error(fmt::format("{}: cannot parse '{}' as a number at row {}, column {}",
                                path.string(), fields[cols[k]], row, names[k]));
      }
      values.push_back(*v);
    }
    try {
      labels.push_back(parse_label(fields[label_col]));
    } catch (const Error& e) {
      throw Error(fmt::format("{}: row {}, column {}: {}", path.string(), row, kLabelColumn, e.what()));
    }
    ids.push_back(id_col ? fields[*id_col] : std::to_string(row - 1));
  }
  if (labels.empty()) throw Error("empty file (no data rows): " + path.string());
  const std::size_t p = names.size();
  return LabeledDataset(Matrix(std::move(values), p), std::move(labels), std::move(names), std::move(ids));
}

void write_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << kIdColumn;
  for (const auto& s : data.specs()) out << ',' << s.name;
  out << ',' << kLabelColumn << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out << data.row_ids()[i];
    for (const double v : data.row(i)) out << ',' << format_real(v);
    out << ',' << to_string(data.label(i)) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

SplitResult stratified_split(const LabeledDataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(fmt::format("test fraction {} outside (0, 1)", test_fraction));
  }
  Rng rng(seed);
  std::vector<bool> in_test(data.rows(), false);
  for (const Label cls : {Label::fail, Label::pass}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (data.label(i) == cls) members.push_back(i);
    }
    if (members.size() < 2) {
      throw Error(fmt::format("class {} has {} members; stratified split needs at least 2",
                              to_string(cls), members.size()));
    }
    auto take = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    take = std::clamp<std::size_t>(take, 1, members.size() - 1);
    rng.shuffle(members);
    for (std::size_t k = 0; k < take; ++k) in_test[members[k]] = true;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < data.rows(); ++i) (in_test[i] ? test_rows : train_rows).push_back(i);
  return SplitResult{data.subset(train_rows), data.subset(test_rows), seed, std::move(train_rows),
                     std::move(test_rows)};
}

double imbalance_ratio(const LabeledDataset& data) {
  const double fails = static_cast<double>(data.count(Label::fail));
  const double passes = static_cast<double>(data.count(Label::pass));
  if (fails == 0 || passes == 0) throw Error("imbalance ratio needs both classes present");
  return std::max(fails, passes) / std::min(fails, passes);
}

}  // namespace cfbench
