#pragma once

#include <cstddef>
#include <cstdint>

#include "cfbench/dataset.hpp"

namespace cfbench {

struct ClassWeights {
  double fail = 1.0;
  double pass = 1.0;

  double of(Label label) const { return label == Label::fail ? fail : pass; }
  bool uniform() const { return fail == 1.0 && pass == 1.0; }
  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

// The class with fewer rows; fail when counts are equal.
Label minority_class(const LabeledDataset& data);

// Majority rows drawn without replacement down to the minority count. Output
// keeps input row order.
LabeledDataset random_undersample(const LabeledDataset& train, std::uint64_t seed);

// Input rows followed by minority rows drawn with replacement until counts
// match.
LabeledDataset random_oversample(const LabeledDataset& train, std::uint64_t seed);

// Input rows followed by synthetic minority rows
//   x_new = x_i + lambda * (x_nn - x_i),  lambda ~ U[0, 1)
// where x_nn is one of the k Euclidean-nearest minority neighbours of x_i on
// raw feature values. Minority rows are visited round-robin in input order,
// one synthetic per visit, until the classes are equal in size.
LabeledDataset smote(const LabeledDataset& train, std::size_t k, std::uint64_t seed);

inline constexpr std::size_t kDefaultSmoteNeighbors = 5;

// Majority weight 1, minority weight majority/minority.
ClassWeights cost_weights(const LabeledDataset& train);

}  // namespace cfbench
