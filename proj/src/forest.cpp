#include "cfbench/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "cfbench/csv.hpp"
#include "cfbench/error.hpp"
#include "cfbench/parallel.hpp"
#include "cfbench/rng.hpp"

namespace cfbench {

std::string_view to_string(SplitRule rule) { return rule == SplitRule::gini ? "gini" : "extratrees"; }

SplitRule parse_split_rule(std::string_view token) {
  if (token == "gini") return SplitRule::gini;
  if (token == "extratrees") return SplitRule::extratrees;
  throw Error(fmt::format("unknown split rule '{}'", token));
}

Hyperparams Hyperparams::defaults(std::size_t p, std::size_t n_trees) {
  Hyperparams hp;
  hp.mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
  hp.n_trees = n_trees;
  return hp;
}

void Hyperparams::validate(std::size_t p) const {
  if (mtry == 0 || mtry > p) throw Error(fmt::format("mtry {} outside [1, {}]", mtry, p));
  if (min_node_size == 0) throw Error("min_node_size must be >= 1");
  if (n_trees == 0) throw Error("n_trees must be >= 1");
}

std::string to_string(const Hyperparams& hp) {
  return fmt::format("mtry={} splitrule={} min_node_size={} n_trees={}", hp.mtry, to_string(hp.splitrule),
                     hp.min_node_size, hp.n_trees);
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error("tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) {
      if (!(node.value >= 0.0 && node.value <= 1.0)) throw Error("leaf probability outside [0, 1]");
    } else if (node.feature < 0 || i + 1 >= nodes_.size() || node.right <= i + 1 ||
               node.right >= nodes_.size()) {
      throw Error(fmt::format("malformed tree node {}", i));
    }
  }
}

double DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  const TreeNode* nodes = nodes_.data();
  while (!nodes[i].is_leaf()) {
    i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].value ? i + 1 : nodes[i].right;
  }
  return nodes[i].value;
}

DecisionTree DecisionTree::stump(std::size_t feature, double threshold, double left_fail, double right_fail) {
  return DecisionTree({TreeNode{static_cast<std::int32_t>(feature), 2, threshold},
                       TreeNode{TreeNode::kLeaf, 0, left_fail}, TreeNode{TreeNode::kLeaf, 0, right_fail}});
}

RandomForestModel::RandomForestModel(std::vector<DecisionTree> trees, std::size_t n_features,
                                     ClassWeights weights, std::uint64_t training_seed)
    : trees_(std::move(trees)), n_features_(n_features), weights_(weights), seed_(training_seed) {
  if (trees_.empty()) throw Error("forest has no trees");
  for (const auto& tree : trees_) {
    for (const auto& node : tree.nodes()) {
      if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= n_features_) {
        throw Error("tree splits on a feature outside the model width");
      }
    }
  }
}

double RandomForestModel::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error(fmt::format("dimension mismatch: instance {} vs model {}", x.size(), n_features_));
  }
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.predict(x);
  return sum / static_cast<double>(trees_.size());
}

Label RandomForestModel::predict(std::span<const double> x) const {
  return predict_proba(x) >= kDecisionThreshold ? Label::fail : Label::pass;
}

std::vector<double> RandomForestModel::predict_proba(const Matrix& rows) const {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_proba(rows.row(i));
  return out;
}

namespace {

// Sorted unique values per feature and each row's rank among them.
struct ColumnIndex {
  std::size_t n = 0;
  std::vector<std::vector<double>> unique;
  std::vector<std::uint32_t> rank;  // column-major, rank[j * n + i]
  std::size_t max_unique = 0;

  explicit ColumnIndex(const LabeledDataset& data) : n(data.rows()) {
    const std::size_t p = data.cols();
    unique.resize(p);
    rank.resize(p * n);
    for (std::size_t j = 0; j < p; ++j) {
      auto& u = unique[j];
      u.reserve(n);
      for (std::size_t i = 0; i < n; ++i) u.push_back(data.features()(i, j));
      std::sort(u.begin(), u.end());
      u.erase(std::unique(u.begin(), u.end()), u.end());
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(u.begin(), u.end(), data.features()(i, j));
        rank[j * n + i] = static_cast<std::uint32_t>(it - u.begin());
      }
      max_unique = std::max(max_unique, u.size());
    }
  }
};

template <bool kWeighted>
class TreeBuilder {
 public:
  TreeBuilder(const LabeledDataset& data, const ColumnIndex& columns, const Hyperparams& hp,
              const ClassWeights& weights, std::uint64_t seed)
      : data_(data), columns_(columns), hp_(hp), weights_(weights), rng_(seed) {
    const std::size_t p = data.cols();
    features_.resize(p);
    std::iota(features_.begin(), features_.end(), std::uint32_t{0});
    bucket_fail_.assign(columns.max_unique, 0.0);
    bucket_pass_.assign(columns.max_unique, 0.0);
    bucket_count_.assign(columns.max_unique, 0);
  }

  DecisionTree build(std::vector<std::uint32_t>* in_bag = nullptr) {
    bootstrap();
    if (in_bag) *in_bag = samples_;
    nodes_.clear();
    grow(0, samples_.size());
    return DecisionTree(std::move(nodes_));
  }

 private:
  double weight(std::uint32_t row) const {
    if constexpr (kWeighted) {
      return weights_.of(data_.label(row));
    } else {
      return 1.0;
    }
  }
  bool is_fail(std::uint32_t row) const { return data_.label(row) == Label::fail; }

  void bootstrap() {
    const std::size_t n = data_.rows();
    samples_.resize(n);
    if constexpr (kWeighted) {
      std::vector<double> cumulative(n);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        total += weights_.of(data_.label(i));
        cumulative[i] = total;
      }
      for (auto& s : samples_) {
        const double u = rng_.uniform01() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        s = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                static_cast<std::ptrdiff_t>(n - 1)));
      }
    } else {
      for (auto& s : samples_) {
        const double u = rng_.uniform01() * static_cast<double>(n);
        s = static_cast<std::uint32_t>(std::min(static_cast<std::size_t>(u), n - 1));
      }
    }
  }

  static double purity(double f, double p) { return (f * f + p * p) / (f + p); }

  struct Split {
    std::int32_t feature = TreeNode::kLeaf;
    double threshold = 0.0;
    double score = 0.0;
  };

  void grow(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(TreeNode{});
    const std::size_t size = end - begin;
    double wf = 0.0, wp = 0.0;
    std::size_t fails = 0;
    for (std::size_t s = begin; s < end; ++s) {
      const auto row = samples_[s];
      if (is_fail(row)) {
        wf += weight(row);
        ++fails;
      } else {
        wp += weight(row);
      }
    }
    const double leaf_value = static_cast<double>(fails) / static_cast<double>(size);
    if (size < 2 || size < hp_.min_node_size || fails == 0 || fails == size) {
      nodes_[id] = TreeNode{TreeNode::kLeaf, 0, leaf_value};
      return;
    }

    Split best;
    best.score = purity(wf, wp);
    const std::size_t p = features_.size();
    for (std::size_t k = 0; k < hp_.mtry; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng_.index(p - k));
      std::swap(features_[k], features_[pick]);
      const std::uint32_t j = features_[k];
      if (hp_.splitrule == SplitRule::gini) {
        best_gini_split(j, begin, end, wf, wp, best);
      } else {
        random_split(j, begin, end, wf, wp, best);
      }
    }
    if (best.feature == TreeNode::kLeaf) {
      nodes_[id] = TreeNode{TreeNode::kLeaf, 0, leaf_value};
      return;
    }

    const auto j = static_cast<std::size_t>(best.feature);
    const auto mid_it = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                       samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                       [&](std::uint32_t row) { return data_.features()(row, j) <= best.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - samples_.begin());
    grow(begin, mid);
    const auto right = static_cast<std::uint32_t>(nodes_.size());
    grow(mid, end);
    nodes_[id] = TreeNode{best.feature, right, best.threshold};
  }

  void consider(std::uint32_t j, double lf, double lp, double wf, double wp, double threshold, Split& best) const {
    const double rf = wf - lf;
    const double rp = wp - lp;
    if (lf + lp <= 0.0 || rf + rp <= 0.0) return;
    const double score = purity(lf, lp) + purity(rf, rp);
    if (score > best.score) {
      best.score = score;
      best.feature = static_cast<std::int32_t>(j);
      best.threshold = threshold;
    }
  }

  double midpoint(const std::vector<double>& u, std::uint32_t lo, std::uint32_t hi) const {
    const double t = u[lo] + (u[hi] - u[lo]) * 0.5;
    return t < u[hi] ? t : u[lo];
  }

  void best_gini_split(std::uint32_t j, std::size_t begin, std::size_t end, double wf, double wp, Split& best) {
    const std::size_t n = columns_.n;
    const auto& u = columns_.unique[j];
    const std::uint32_t* rank = columns_.rank.data() + j * n;
    const std::size_t size = end - begin;
    if (size * 4 < u.size()) {
      // sparse node: sort (rank, row) pairs
      pairs_.clear();
      for (std::size_t s = begin; s < end; ++s) pairs_.emplace_back(rank[samples_[s]], samples_[s]);
      std::sort(pairs_.begin(), pairs_.end());
      double lf = 0.0, lp = 0.0;
      for (std::size_t k = 0; k + 1 < pairs_.size(); ++k) {
        const auto row = pairs_[k].second;
        (is_fail(row) ? lf : lp) += weight(row);
        if (pairs_[k].first != pairs_[k + 1].first) {
          consider(j, lf, lp, wf, wp, midpoint(u, pairs_[k].first, pairs_[k + 1].first), best);
        }
      }
      return;
    }
    std::uint32_t lo = UINT32_MAX, hi = 0;
    for (std::size_t s = begin; s < end; ++s) {
      const auto row = samples_[s];
      const auto r = rank[row];
      (is_fail(row) ? bucket_fail_[r] : bucket_pass_[r]) += weight(row);
      ++bucket_count_[r];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    double lf = 0.0, lp = 0.0;
    std::uint32_t prev = lo;
    lf += bucket_fail_[lo];
    lp += bucket_pass_[lo];
    for (std::uint32_t r = lo + 1; r <= hi; ++r) {
      if (bucket_count_[r] == 0) continue;
      consider(j, lf, lp, wf, wp, midpoint(u, prev, r), best);
      lf += bucket_fail_[r];
      lp += bucket_pass_[r];
      prev = r;
    }
    for (std::uint32_t r = lo; r <= hi; ++r) {
      bucket_fail_[r] = 0.0;
      bucket_pass_[r] = 0.0;
      bucket_count_[r] = 0;
    }
  }

  void random_split(std::uint32_t j, std::size_t begin, std::size_t end, double wf, double wp, Split& best) {
    const std::size_t n = columns_.n;
    const auto& u = columns_.unique[j];
    const std::uint32_t* rank = columns_.rank.data() + j * n;
    std::uint32_t lo = UINT32_MAX, hi = 0;
    for (std::size_t s = begin; s < end; ++s) {
      lo = std::min(lo, rank[samples_[s]]);
      hi = std::max(hi, rank[samples_[s]]);
    }
    if (lo == hi) return;
    const double a = u[lo];
    const double b = u[hi];
    double t = a + rng_.uniform01() * (b - a);
    if (!(t > a && t < b)) t = midpoint(u, lo, hi);
    if (!(t > a && t < b)) return;
    double lf = 0.0, lp = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
      const auto row = samples_[s];
      if (u[rank[row]] <= t) (is_fail(row) ? lf : lp) += weight(row);
    }
    consider(j, lf, lp, wf, wp, t, best);
  }

  const LabeledDataset& data_;
  const ColumnIndex& columns_;
  const Hyperparams& hp_;
  ClassWeights weights_;
  Rng rng_;
  std::vector<std::uint32_t> features_;
  std::vector<std::uint32_t> samples_;
  std::vector<TreeNode> nodes_;
  std::vector<double> bucket_fail_, bucket_pass_;
  std::vector<std::uint32_t> bucket_count_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
};

template <bool kWeighted>
RandomForestModel fit_with(const LabeledDataset& train, const Hyperparams& hp, const ClassWeights& weights,
                           std::uint64_t seed, std::vector<std::vector<std::uint32_t>>* in_bag = nullptr) {
  hp.validate(train.cols());
  if (!(weights.fail > 0.0 && weights.pass > 0.0)) throw Error("class weights must be positive");
  const ColumnIndex columns(train);
  std::vector<DecisionTree> trees(hp.n_trees);
  if (in_bag) in_bag->assign(hp.n_trees, {});
  parallel_for(hp.n_trees, [&](std::size_t t) {
    TreeBuilder<kWeighted> builder(train, columns, hp, weights, derive_seed(seed, t));
    trees[t] = builder.build(in_bag ? &(*in_bag)[t] : nullptr);
  });
  return RandomForestModel(std::move(trees), train.cols(), weights, seed);
}

}  // namespace

RandomForestModel fit_forest(const LabeledDataset& train, const Hyperparams& hp, const ClassWeights& weights,
                             std::uint64_t seed) {
  if (weights.uniform()) return fit_with<false>(train, hp, weights, seed);
  return fit_with<true>(train, hp, weights, seed);
}

namespace detail {

RandomForestModel fit_forest_weighted_path(const LabeledDataset& train, const Hyperparams& hp,
                                           const ClassWeights& weights, std::uint64_t seed) {
  return fit_with<true>(train, hp, weights, seed);
}

}  // namespace detail

std::vector<double> oob_error_curve(const LabeledDataset& train, const Hyperparams& hp,
                                    const ClassWeights& weights, std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> in_bag;
  const auto model = weights.uniform() ? fit_with<false>(train, hp, weights, seed, &in_bag)
                                       : fit_with<true>(train, hp, weights, seed, &in_bag);
  const std::size_t n = train.rows();
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> votes(n, 0);
  std::vector<double> curve;
  curve.reserve(model.trees().size());
  std::vector<bool> bagged(n);
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    std::fill(bagged.begin(), bagged.end(), false);
    for (const auto row : in_bag[t]) bagged[row] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (bagged[i]) continue;
      sum[i] += model.trees()[t].predict(train.row(i));
      ++votes[i];
    }
    std::size_t scored = 0, wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (votes[i] == 0) continue;
      ++scored;
      const Label predicted =
          sum[i] / static_cast<double>(votes[i]) >= kDecisionThreshold ? Label::fail : Label::pass;
      if (predicted != train.label(i)) ++wrong;
    }
    curve.push_back(scored == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(scored));
  }
  return curve;
}

double auc(std::span<const double> fail_scores, std::span<const Label> labels) {
  if (fail_scores.size() != labels.size()) throw Error("score and label counts differ");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fail_scores[a] < fail_scores[b]; });
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    while (k < n && fail_scores[order[k]] == fail_scores[order[i]]) ++k;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(k)) / 2.0;
    for (std::size_t t = i; t < k; ++t) {
      if (labels[order[t]] == Label::fail) {
        rank_sum += mid_rank;
        ++positives;
      }
    }
    i = k;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw Error("AUC is undefined without both classes");
  const double np = static_cast<double>(positives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double f1_fail(std::span<const Label> predicted, std::span<const Label> actual) {
  if (predicted.size() != actual.size()) throw Error("prediction and label counts differ");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const bool p = predicted[i] == Label::fail;
    const bool a = actual[i] == Label::fail;
    tp += p && a;
    fp += p && !a;
    fn += !p && a;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

EvalMetrics evaluate(const RandomForestModel& model, const LabeledDataset& test) {
  const auto scores = model.predict_proba(test.features());
  std::vector<Label> predicted(scores.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    predicted[i] = scores[i] >= kDecisionThreshold ? Label::fail : Label::pass;
    correct += predicted[i] == test.label(i);
  }
  EvalMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(test.rows());
  m.auc = auc(scores, test.labels());
  m.f1 = f1_fail(predicted, test.labels());
  return m;
}

std::string_view to_string(CvObjective objective) {
  switch (objective) {
    case CvObjective::auc: return "auc";
    case CvObjective::accuracy: return "accuracy";
    case CvObjective::f1: return "f1";
  }
  return "auc";
}

CvObjective parse_cv_objective(std::string_view token) {
  if (token == "auc") return CvObjective::auc;
  if (token == "accuracy") return CvObjective::accuracy;
  if (token == "f1") return CvObjective::f1;
  throw Error(fmt::format("unknown CV objective '{}'", token));
}

TuneResult tune(const LabeledDataset& train, const std::vector<Hyperparams>& grid, const CvSpec& cv,
                const ClassWeights& weights) {
  if (grid.empty()) throw Error("tuning grid is empty");
  if (cv.folds < 2) throw Error("cross-validation needs at least 2 folds");
  if (cv.repeats == 0) throw Error("cross-validation needs at least 1 repeat");
  for (const auto& hp : grid) hp.validate(train.cols());
  for (const Label cls : {Label::fail, Label::pass}) {
    if (train.count(cls) < cv.folds) {
      throw Error(fmt::format("class {} has {} rows, fewer than {} folds", to_string(cls), train.count(cls),
                              cv.folds));
    }
  }

  // fold[r][i]: fold of row i in repeat r
  std::vector<std::vector<std::size_t>> fold(cv.repeats, std::vector<std::size_t>(train.rows()));
  for (std::size_t r = 0; r < cv.repeats; ++r) {
    Rng rng(derive_seed(cv.seed, r));
    for (const Label cls : {Label::fail, Label::pass}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < train.rows(); ++i) {
        if (train.label(i) == cls) members.push_back(i);
      }
      rng.shuffle(members);
      for (std::size_t k = 0; k < members.size(); ++k) fold[r][members[k]] = k % cv.folds;
    }
  }

  const std::size_t per_point = cv.repeats * cv.folds;
  std::vector<double> scores(grid.size() * per_point);
  parallel_for(scores.size(), [&](std::size_t task) {
    const std::size_t g = task / per_point;
    const std::size_t r = (task % per_point) / cv.folds;
    const std::size_t f = task % cv.folds;
    std::vector<std::size_t> in, out;
    for (std::size_t i = 0; i < train.rows(); ++i) (fold[r][i] == f ? out : in).push_back(i);
    const auto fit_part = train.subset(in);
    const auto held_out = train.subset(out);
    const auto model = fit_forest(fit_part, grid[g], weights, derive_seed(cv.seed, 0x10000 + r * cv.folds + f));
    const auto m = evaluate(model, held_out);
    scores[task] = cv.objective == CvObjective::auc ? m.auc : cv.objective == CvObjective::accuracy ? m.accuracy : m.f1;
  });

  TuneResult result;
  result.mean_scores.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (std::size_t t = 0; t < per_point; ++t) s += scores[g * per_point + t];
    result.mean_scores[g] = s / static_cast<double>(per_point);
    if (g == 0 || result.mean_scores[g] > result.mean_scores[result.best_index]) result.best_index = g;
  }
  result.best = grid[result.best_index];
  return result;
}

std::vector<Hyperparams> default_grid(std::size_t p, std::size_t n_trees) {
  std::vector<std::size_t> mtrys;
  for (const std::size_t m : {2, 6, 21, 41}) {
    const std::size_t capped = std::min(m, p);
    if (std::find(mtrys.begin(), mtrys.end(), capped) == mtrys.end()) mtrys.push_back(capped);
  }
  std::vector<Hyperparams> grid;
  for (const auto mtry : mtrys) {
    for (const auto rule : {SplitRule::gini, SplitRule::extratrees}) {
      for (const std::size_t node : {1, 5, 10}) grid.push_back(Hyperparams{mtry, rule, node, n_trees});
    }
  }
  return grid;
}

void write_model(const RandomForestModel& model, std::ostream& out) {
  out << "cfbench-forest 1\n";
  out << "features " << model.n_features() << '\n';
  out << "weights " << format_real(model.class_weights().fail) << ' ' << format_real(model.class_weights().pass)
      << '\n';
  out << "seed " << model.training_seed() << '\n';
  out << "trees " << model.trees().size() << '\n';
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    const auto& nodes = model.trees()[t].nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      if (node.is_leaf()) {
        out << "node " << t << ' ' << i << " leaf " << format_real(node.value) << ' '
            << format_real(1.0 - node.value) << '\n';
      } else {
        out << "node " << t << ' ' << i << " split " << node.feature << ' ' << format_real(node.value) << ' '
            << i + 1 << ' ' << node.right << '\n';
      }
    }
  }
}

void write_model(const RandomForestModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_model(model, out);
  if (!out) throw Error("write failed: " + path.string());
}

RandomForestModel read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](std::string_view why) -> Error {
    return Error(fmt::format("model line {}: {}", line_no, why));
  };
  auto expect = [&](std::string_view key) {
    if (!std::getline(in, line)) throw fail(fmt::format("missing '{}'", key));
    ++line_no;
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw fail(fmt::format("expected '{}', got '{}'", key, k));
    std::string rest;
    std::getline(ls, rest);
    return rest;
  };
  if (expect("cfbench-forest") != " 1") throw fail("unsupported format version");
  std::size_t features = 0, n_trees = 0;
  std::uint64_t seed = 0;
  ClassWeights weights;
  std::istringstream(expect("features")) >> features;
  {
    std::istringstream ws(expect("weights"));
    std::string f, p;
    ws >> f >> p;
    const auto wf = parse_real(f), wp = parse_real(p);
    if (!wf || !wp) throw fail("bad weights");
    weights = ClassWeights{*wf, *wp};
  }
  std::istringstream(expect("seed")) >> seed;
  std::istringstream(expect("trees")) >> n_trees;
  if (features == 0 || n_trees == 0) throw fail("bad header");

  std::vector<std::vector<TreeNode>> nodes(n_trees);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag, kind;
    std::size_t t = 0, id = 0;
    ls >> tag >> t >> id >> kind;
    if (!ls || tag != "node" || t >= n_trees || id != nodes[t].size()) throw fail("bad node record");
    if (kind == "leaf") {
      std::string pf, pp;
      ls >> pf >> pp;
      const auto f = parse_real(pf), p = parse_real(pp);
      if (!f || !p || std::abs(*f + *p - 1.0) > 1e-9) throw fail("bad leaf probabilities");
      nodes[t].push_back(TreeNode{TreeNode::kLeaf, 0, *f});
    } else if (kind == "split") {
      std::int32_t feature = 0;
      std::string threshold;
      std::size_t left = 0, right = 0;
      ls >> feature >> threshold >> left >> right;
      const auto th = parse_real(threshold);
      if (!ls || !th || left != id + 1) throw fail("bad split record");
      nodes[t].push_back(TreeNode{feature, static_cast<std::uint32_t>(right), *th});
    } else {
      throw fail(fmt::format("unknown node kind '{}'", kind));
    }
  }
  std::vector<DecisionTree> trees;
  trees.reserve(n_trees);
  for (auto& tn : nodes) trees.emplace_back(std::move(tn));
  return RandomForestModel(std::move(trees), features, weights, seed);
}

RandomForestModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model " + path.string());
  return read_model(in);
}

}  // namespace cfbench
