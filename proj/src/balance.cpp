#include "cfbench/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cfbench/error.hpp"
#include "cfbench/rng.hpp"

namespace cfbench {

namespace {

struct ClassRows {
  std::vector<std::size_t> minority;
  std::vector<std::size_t> majority;
  Label minority_label;
};

ClassRows split_by_class(const LabeledDataset& data) {
  const std::size_t fails = data.count(Label::fail);
  const std::size_t passes = data.count(Label::pass);
  if (fails == 0 || passes == 0) throw Error("balancing needs both classes present");
  ClassRows rows;
  rows.minority_label = fails <= passes ? Label::fail : Label::pass;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    (data.label(i) == rows.minority_label ? rows.minority : rows.majority).push_back(i);
  }
  return rows;
}

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace

Label minority_class(const LabeledDataset& data) { return split_by_class(data).minority_label; }

LabeledDataset random_undersample(const LabeledDataset& train, std::uint64_t seed) {
  auto rows = split_by_class(train);
  Rng rng(seed);
  rng.shuffle(rows.majority);
  rows.majority.resize(rows.minority.size());
  std::vector<std::size_t> keep = rows.minority;
  keep.insert(keep.end(), rows.majority.begin(), rows.majority.end());
  std::sort(keep.begin(), keep.end());
  return train.subset(keep);
}

LabeledDataset random_oversample(const LabeledDataset& train, std::uint64_t seed) {
  const auto rows = split_by_class(train);
  Rng rng(seed);
  std::vector<std::size_t> keep(train.rows());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  for (std::size_t extra = rows.majority.size() - rows.minority.size(); extra > 0; --extra) {
    keep.push_back(rows.minority[rng.index(rows.minority.size())]);
  }
  return train.subset(keep);
}

LabeledDataset smote(const LabeledDataset& train, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error("SMOTE needs k >= 1");
  const auto rows = split_by_class(train);
  const std::size_t m = rows.minority.size();
  if (m < k + 1) {
    throw Error(fmt::format("SMOTE with k = {} needs at least {} minority rows, found {}", k, k + 1, m));
  }

  // k nearest minority neighbours of each minority row, ties by lower row.
  std::vector<std::vector<std::size_t>> neighbors(m);
  std::vector<std::pair<double, std::size_t>> scratch;
  for (std::size_t a = 0; a < m; ++a) {
    scratch.clear();
    const auto xa = train.row(rows.minority[a]);
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      scratch.emplace_back(squared_euclidean(xa, train.row(rows.minority[b])), b);
    }
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
    for (std::size_t t = 0; t < k; ++t) neighbors[a].push_back(scratch[t].second);
  }

  Matrix features = train.features();
  std::vector<Label> labels = train.labels();
  std::vector<std::string> ids = train.row_ids();
  Rng rng(seed);
  const std::size_t needed = rows.majority.size() - m;
  std::vector<double> synthetic(train.cols());
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t a = s % m;
    const std::size_t b = neighbors[a][rng.index(k)];
    const double lambda = rng.uniform01();
    const auto xa = train.row(rows.minority[a]);
    const auto xb = train.row(rows.minority[b]);
    for (std::size_t j = 0; j < synthetic.size(); ++j) synthetic[j] = xa[j] + lambda * (xb[j] - xa[j]);
    features.append_row(synthetic);
    labels.push_back(rows.minority_label);
    ids.push_back(fmt::format("smote_{}", s));
  }
  return LabeledDataset(std::move(features), std::move(labels), train.feature_names(), std::move(ids));
}

ClassWeights cost_weights(const LabeledDataset& train) {
  const auto fails = static_cast<double>(train.count(Label::fail));
  const auto passes = static_cast<double>(train.count(Label::pass));
  if (fails == 0 || passes == 0) throw Error("cost weights need both classes present");
  if (fails <= passes) return ClassWeights{passes / fails, 1.0};
  return ClassWeights{1.0, fails / passes};
}

}  // namespace cfbench
