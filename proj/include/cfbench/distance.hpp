#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfbench/dataset.hpp"

namespace cfbench {

// Per-feature normalisation shared by the Gower and HEOM kernels. Numeric
// features with zero width are excluded from both (they contribute nothing
// and do not count towards the Gower denominator). Categorical features use
// the overlap rule: 0 when equal, 1 otherwise.
class RangeTable {
 public:
  RangeTable() = default;
  explicit RangeTable(std::vector<double> widths, std::vector<bool> categorical = {});

  // Widths max - min of the dataset's observed ranges.
  static RangeTable from(const LabeledDataset& data);

  std::size_t size() const { return widths_.size(); }
  double width(std::size_t j) const { return widths_[j]; }
  bool categorical(std::size_t j) const { return !categorical_.empty() && categorical_[j]; }
  bool excluded(std::size_t j) const { return !categorical(j) && widths_[j] == 0.0; }
  // Features taking part in distances.
  std::size_t active() const { return active_; }

  // 1/width for active numeric features, 0 otherwise.
  const std::vector<double>& inverse_widths() const { return inverse_; }
  bool has_categorical() const { return has_categorical_; }

 private:
  std::vector<double> widths_;
  std::vector<bool> categorical_;
  std::vector<double> inverse_;
  std::size_t active_ = 0;
  bool has_categorical_ = false;
};

enum class Metric { gower, heom };

// Mean per-feature distance over active features; each numeric term is
// |a_j - b_j| / width_j clamped at 1, so the result lies in [0, 1].
// Throws on dimension mismatch or when no feature is active.
double gower(std::span<const double> a, std::span<const double> b, const RangeTable& ranges);

// sqrt(sum_j term_j^2) with unclamped range-normalised numeric terms.
double heom(std::span<const double> a, std::span<const double> b, const RangeTable& ranges);

double distance(Metric metric, std::span<const double> a, std::span<const double> b,
                const RangeTable& ranges);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Exact k nearest rows of pool, ascending by distance, ties by lower index.
std::vector<Neighbor> k_nearest(std::span<const double> query, const Matrix& pool, Metric metric,
                                std::size_t k, const RangeTable& ranges);

// As above, restricted to the listed pool rows. Returned indices are pool
// row numbers.
std::vector<Neighbor> k_nearest(std::span<const double> query, const Matrix& pool,
                                std::span<const std::size_t> candidates, Metric metric, std::size_t k,
                                const RangeTable& ranges);

}  // namespace cfbench
