#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfbench/dataset.hpp"
#include "cfbench/distance.hpp"
#include "cfbench/forest.hpp"

namespace cfbench {

enum class Method { whatif, moc, nice_sp, nice_pr };

inline constexpr std::array<Method, 4> kAllMethods = {Method::whatif, Method::moc, Method::nice_sp,
                                                     Method::nice_pr};

std::string_view to_string(Method method);
Method parse_method(std::string_view token);

// An instance the model labels fail, to be moved into the pass region.
struct CfRequest {
  std::string id;
  Instance x;
  Label desired = Label::pass;
  std::vector<bool> mutable_mask;
  std::vector<std::pair<double, double>> bounds;

  // All features mutable, bounds taken from the data's observed ranges.
  static CfRequest make(std::string id, Instance x, const LabeledDataset& data);

  // Throws unless dimensions agree with the model, a feature is mutable, the
  // desired label is pass and the model currently predicts fail for x.
  void validate(const RandomForestModel& model) const;
};

struct GenerationMeta {
  std::size_t rank = 0;        // whatif: position among the k neighbours
  double distance = 0.0;       // whatif: Gower distance to x
  std::size_t generation = 0;  // moc: generation the candidate was created in
  std::size_t iterations = 0;  // nice: number of feature copies
  std::vector<std::size_t> copied;  // nice: features copied, in order
  std::optional<std::size_t> source_row;  // whatif / nice: pool row used
};

struct Counterfactual {
  Instance values;
  Method method = Method::whatif;
  std::string request_id;
  GenerationMeta meta;
};

// All four are minimised.
struct MocObjectives {
  double validity = 0.0;     // probability shortfall below the pass threshold
  double proximity = 0.0;    // Gower(x, candidate)
  std::size_t sparsity = 0;  // changed features
  double plausibility = 0.0; // mean Gower distance to the k nearest training rows

  std::array<double, 4> as_array() const {
    return {validity, proximity, static_cast<double>(sparsity), plausibility};
  }
};

inline constexpr std::size_t kPlausibilityNeighbors = 5;

// Shortfall used for a fail-labelled candidate whose pass probability is
// exactly at the threshold, so that o_v = 0 coincides with a pass label.
inline constexpr double kTieShortfall = 1e-9;

// o_v = 0 when the model labels cand pass, otherwise max(0.5 - P(pass), tie
// shortfall). o_p is Gower to x, o_s counts features with cand_j != x_j, and
// o_pl averages the Gower distance to the nearest training rows.
MocObjectives objectives(std::span<const double> x, std::span<const double> cand, const RandomForestModel& model,
                         const LabeledDataset& train, const RangeTable& ranges);
MocObjectives objectives(std::span<const double> x, std::span<const double> cand, const RandomForestModel& model,
                         const LabeledDataset& train);

// Model predictions over a dataset, computed once and shared by requests.
class PredictedPool {
 public:
  PredictedPool(const RandomForestModel& model, const LabeledDataset& data);

  const RandomForestModel& model() const { return *model_; }
  const LabeledDataset& data() const { return *data_; }
  const std::vector<Label>& predicted() const { return predicted_; }
  // Rows the model labels pass.
  const std::vector<std::size_t>& predicted_pass() const { return predicted_pass_; }
  // Rows labelled pass and predicted pass.
  const std::vector<std::size_t>& correct_pass() const { return correct_pass_; }

 private:
  const RandomForestModel* model_;
  const LabeledDataset* data_;
  std::vector<Label> predicted_;
  std::vector<std::size_t> predicted_pass_;
  std::vector<std::size_t> correct_pass_;
};

inline constexpr std::size_t kDefaultWhatIfK = 10;

// The k Gower-nearest pool rows that the model labels pass, nearest first.
// Rows whose immutable features differ from x are not eligible.
std::vector<Counterfactual> whatif(const CfRequest& req, const PredictedPool& pool, std::size_t k,
                                   const RangeTable& ranges);
std::vector<Counterfactual> whatif(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& pool,
                                   std::size_t k);

enum class NiceReward { sparsity, proximity };

// Greedy hybridisation towards the HEOM-nearest correctly classified pass
// row (the nearest unlike neighbour). Each step copies the single mutable
// feature with the best reward; it stops as soon as the model says pass.
Counterfactual nice(const CfRequest& req, const PredictedPool& pool, NiceReward reward, const RangeTable& ranges);
Counterfactual nice(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& train,
                    NiceReward reward);

struct MocConfig {
  std::size_t population = 100;
  std::size_t generations = 50;
  double mutation_rate = 0.3;
  double crossover_rate = 0.7;
  std::uint64_t seed = 0;

  void validate() const;
};

// NSGA-II search over the four objectives. Returns the distinct valid
// members of the final first front, ordered by (o_p, o_s, o_pl). May be
// empty.
std::vector<Counterfactual> moc(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& train,
                                const MocConfig& cfg, const RangeTable& ranges);
std::vector<Counterfactual> moc(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& train,
                                const MocConfig& cfg);

// a dominates b: no worse everywhere, strictly better somewhere.
bool dominates(const std::array<double, 4>& a, const std::array<double, 4>& b);

// Fronts of indices, first front first (fast non-dominated sort).
std::vector<std::vector<std::size_t>> non_dominated_fronts(const std::vector<std::array<double, 4>>& points);

// Crowding distance of each member of one front (same order as front).
std::vector<double> crowding_distance(const std::vector<std::array<double, 4>>& points,
                                      const std::vector<std::size_t>& front);

}  // namespace cfbench
