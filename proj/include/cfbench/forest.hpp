#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfbench/balance.hpp"
#include "cfbench/dataset.hpp"

namespace cfbench {

enum class SplitRule { gini, extratrees };

std::string_view to_string(SplitRule rule);
SplitRule parse_split_rule(std::string_view token);

struct Hyperparams {
  std::size_t mtry = 1;
  SplitRule splitrule = SplitRule::gini;
  std::size_t min_node_size = 1;
  std::size_t n_trees = 500;

  // floor(sqrt(p)) features per split, gini, min node size 1.
  static Hyperparams defaults(std::size_t p, std::size_t n_trees = 500);

  // Throws when mtry is 0 or exceeds p, or min_node_size / n_trees is 0.
  void validate(std::size_t p) const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

std::string to_string(const Hyperparams& hp);

// Flat binary tree in preorder: an internal node's left child is the next
// node, its right child is stored explicitly. Rows with x[feature] <=
// threshold go left.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  std::uint32_t right = 0;
  // threshold for internal nodes, probability of fail for leaves
  double value = 0.0;

  bool is_leaf() const { return feature == kLeaf; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes);

  // Leaf probability of fail for x.
  double predict(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

  // Single-split helper for hand-built models: x[feature] <= threshold
  // yields left_fail, otherwise right_fail.
  static DecisionTree stump(std::size_t feature, double threshold, double left_fail, double right_fail);

 private:
  std::vector<TreeNode> nodes_;
};

class RandomForestModel {
 public:
  RandomForestModel() = default;
  RandomForestModel(std::vector<DecisionTree> trees, std::size_t n_features, ClassWeights weights = {},
                    std::uint64_t training_seed = 0);

  // Mean leaf probability of fail over trees.
  double predict_proba(std::span<const double> x) const;
  double predict_pass(std::span<const double> x) const { return 1.0 - predict_proba(x); }
  // fail iff P(fail) >= 0.5.
  Label predict(std::span<const double> x) const;

  std::vector<double> predict_proba(const Matrix& rows) const;

  std::size_t n_features() const { return n_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ClassWeights& class_weights() const { return weights_; }
  std::uint64_t training_seed() const { return seed_; }

  friend bool operator==(const RandomForestModel&, const RandomForestModel&) = default;

 private:
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
  ClassWeights weights_;
  std::uint64_t seed_ = 0;
};

inline constexpr double kDecisionThreshold = 0.5;

// Grows hp.n_trees trees, each on a bootstrap sample of train (drawn with
// probability proportional to the class weight when the weights are not
// uniform) using class-weighted Gini impurity. Tree t uses an RNG stream
// derived from (seed, t), so the result does not depend on threading.
RandomForestModel fit_forest(const LabeledDataset& train, const Hyperparams& hp,
                             const ClassWeights& weights, std::uint64_t seed);

namespace detail {

// Fits through the weighted code path even when the weights are uniform.
// Exists so tests can compare both paths.
RandomForestModel fit_forest_weighted_path(const LabeledDataset& train, const Hyperparams& hp,
                                           const ClassWeights& weights, std::uint64_t seed);

}  // namespace detail

// Out-of-bag misclassification rate after each tree is added (entry t uses
// trees 0..t). Rows never out of bag so far are skipped.
std::vector<double> oob_error_curve(const LabeledDataset& train, const Hyperparams& hp,
                                    const ClassWeights& weights, std::uint64_t seed);

struct EvalMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
};

// Rank-based AUC (Mann-Whitney U with mid-ranks) treating fail as positive
// and scores as P(fail). Throws when a class is absent.
double auc(std::span<const double> fail_scores, std::span<const Label> labels);

// F1 for the fail class; 0 when nothing is predicted or labelled fail.
double f1_fail(std::span<const Label> predicted, std::span<const Label> actual);

EvalMetrics evaluate(const RandomForestModel& model, const LabeledDataset& test);

enum class CvObjective { auc, accuracy, f1 };

std::string_view to_string(CvObjective objective);
CvObjective parse_cv_objective(std::string_view token);

struct CvSpec {
  std::size_t folds = 10;
  std::size_t repeats = 3;
  CvObjective objective = CvObjective::auc;
  std::uint64_t seed = 0;
};

struct TuneResult {
  Hyperparams best;
  std::size_t best_index = 0;
  std::vector<double> mean_scores;  // one per grid point
};

// Repeated stratified k-fold CV over the grid; ties go to the earlier point.
TuneResult tune(const LabeledDataset& train, const std::vector<Hyperparams>& grid, const CvSpec& cv,
                const ClassWeights& weights);

// mtry in {2, 6, 21, 41} (capped at p, duplicates dropped), splitrule in
// {gini, extratrees}, min_node_size in {1, 5, 10}.
std::vector<Hyperparams> default_grid(std::size_t p, std::size_t n_trees);

// Flat text format:
//   cfbench-forest 1
//   features <p>
//   weights <fail> <pass>
//   seed <seed>
//   trees <T>
//   node <tree> <id> split <feature> <threshold> <left> <right>
//   node <tree> <id> leaf <p_fail> <p_pass>
void write_model(const RandomForestModel& model, std::ostream& out);
void write_model(const RandomForestModel& model, const std::filesystem::path& path);
RandomForestModel read_model(std::istream& in);
RandomForestModel read_model(const std::filesystem::path& path);

}  // namespace cfbench
