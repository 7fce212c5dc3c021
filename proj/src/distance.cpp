#include "cfbench/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include <fmt/format.h>

#include "cfbench/error.hpp"

namespace cfbench {

RangeTable::RangeTable(std::vector<double> widths, std::vector<bool> categorical_mask)
    : widths_(std::move(widths)), categorical_(std::move(categorical_mask)) {
  if (!categorical_.empty() && categorical_.size() != widths_.size()) {
    throw Error("categorical mask length does not match range table");
  }
  inverse_.assign(widths_.size(), 0.0);
  for (std::size_t j = 0; j < widths_.size(); ++j) {
    if (!(widths_[j] >= 0.0)) throw Error(fmt::format("negative width for feature {}", j));
    if (categorical(j)) {
      has_categorical_ = true;
      ++active_;
    } else if (widths_[j] > 0.0) {
      inverse_[j] = 1.0 / widths_[j];
      ++active_;
    }
  }
}

RangeTable RangeTable::from(const LabeledDataset& data) {
  std::vector<double> widths;
  widths.reserve(data.cols());
  for (const auto& spec : data.specs()) widths.push_back(spec.width());
  return RangeTable(std::move(widths));
}

namespace {

void check_dims(std::span<const double> a, std::span<const double> b, const RangeTable& ranges) {
  if (a.size() != b.size() || a.size() != ranges.size()) {
    throw Error(fmt::format("dimension mismatch: {} vs {} vs range table {}", a.size(), b.size(),
                            ranges.size()));
  }
  if (ranges.active() == 0) throw Error("all features have zero width");
}

}  // namespace

double gower(std::span<const double> a, std::span<const double> b, const RangeTable& ranges) {
  check_dims(a, b, ranges);
  const auto& inv = ranges.inverse_widths();
  double sum = 0.0;
  if (!ranges.has_categorical()) {
    for (std::size_t j = 0; j < a.size(); ++j) sum += std::min(std::abs(a[j] - b[j]) * inv[j], 1.0);
  } else {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (ranges.categorical(j)) {
        sum += a[j] != b[j] ? 1.0 : 0.0;
      } else {
        sum += std::min(std::abs(a[j] - b[j]) * inv[j], 1.0);
      }
    }
  }
  return sum / static_cast<double>(ranges.active());
}

double heom(std::span<const double> a, std::span<const double> b, const RangeTable& ranges) {
  check_dims(a, b, ranges);
  const auto& inv = ranges.inverse_widths();
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double term;
    if (ranges.categorical(j)) {
      term = a[j] != b[j] ? 1.0 : 0.0;
    } else {
      term = std::abs(a[j] - b[j]) * inv[j];
    }
    sum += term * term;
  }
  return std::sqrt(sum);
}

double distance(Metric metric, std::span<const double> a, std::span<const double> b,
                const RangeTable& ranges) {
  return metric == Metric::gower ? gower(a, b, ranges) : heom(a, b, ranges);
}

namespace {

bool closer(const Neighbor& x, const Neighbor& y) {
  return x.distance < y.distance || (x.distance == y.distance && x.index < y.index);
}

template <class IndexAt>
std::vector<Neighbor> nearest_impl(std::span<const double> query, const Matrix& pool, std::size_t n,
                                   IndexAt index_at, Metric metric, std::size_t k,
                                   const RangeTable& ranges) {
  if (n == 0) throw Error("k-nearest search over an empty pool");
  if (k == 0) throw Error("k must be positive");
  if (k > n) throw Error(fmt::format("k = {} exceeds pool size {}", k, n));
  if (query.size() != pool.cols()) {
    throw Error(fmt::format("dimension mismatch: query {} vs pool {}", query.size(), pool.cols()));
  }
  // Max-heap on (distance, index): the top is the worst of the current best k.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap(&closer);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t i = index_at(c);
    const Neighbor cand{i, distance(metric, query, pool.row(i), ranges)};
    if (heap.size() < k) {
      heap.push(cand);
    } else if (closer(cand, heap.top())) {
      heap.pop();
      heap.push(cand);
    }
  }
  std::vector<Neighbor> out(heap.size());
  for (std::size_t pos = out.size(); pos > 0; --pos) {
    out[pos - 1] = heap.top();
    heap.pop();
  }
  return out;
}

}  // namespace

std::vector<Neighbor> k_nearest(std::span<const double> query, const Matrix& pool, Metric metric,
                                std::size_t k, const RangeTable& ranges) {
  return nearest_impl(query, pool, pool.rows(), [](std::size_t c) { return c; }, metric, k, ranges);
}

std::vector<Neighbor> k_nearest(std::span<const double> query, const Matrix& pool,
                                std::span<const std::size_t> candidates, Metric metric, std::size_t k,
                                const RangeTable& ranges) {
  for (const std::size_t i : candidates) {
    if (i >= pool.rows()) throw Error("candidate index outside pool");
  }
  return nearest_impl(query, pool, candidates.size(),
                      [&](std::size_t c) { return candidates[c]; }, metric, k, ranges);
}

}  // namespace cfbench
