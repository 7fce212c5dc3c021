#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfbench/cfgen.hpp"
#include "cfbench/forest.hpp"

namespace cfbench {

inline constexpr std::array<std::string_view, 5> kBalancings = {"original", "undersampling", "oversampling", "smote",
                                                                 "cost_sensitive"};
inline constexpr std::array<std::string_view, 2> kTunings = {"vanilla", "tuned"};

// Declarative description of one benchmark run.
//
// File grammar: `#` starts a comment, `[section]` opens a section, every
// other non-blank line is `key = value`. Lists are comma separated. Unknown
// sections or keys are errors. Sections and keys:
//
//   [data]    oulad_dir | csv, course, presentations
//   [split]   test_fraction, seed
//   [grid]    balancing, tuning, methods
//   [forest]  n_trees
//   [tuning]  folds, repeats, objective, cv_trees, mtry, splitrule, min_node_size
//   [smote]   k
//   [whatif]  k
//   [moc]     population, generations, mutation_rate, crossover_rate
//   [run]     master_seed, max_explained_instances (integer or "unlimited"), output_dir
struct ExperimentConfig {
  // data source: exactly one of the two
  std::filesystem::path oulad_dir;
  std::filesystem::path csv;
  std::string course = "DDD";
  std::vector<std::string> presentations = {"2013J", "2014J"};

  double test_fraction = 0.3;
  std::optional<std::uint64_t> split_seed;

  std::vector<std::string> balancing = {kBalancings.begin(), kBalancings.end()};
  std::vector<std::string> tuning = {kTunings.begin(), kTunings.end()};
  std::vector<std::string> methods = {"whatif", "moc", "nice_sp", "nice_pr"};

  std::size_t n_trees = 500;

  std::size_t cv_folds = 10;
  std::size_t cv_repeats = 3;
  CvObjective cv_objective = CvObjective::auc;
  std::size_t cv_trees = 500;
  std::vector<std::size_t> grid_mtry = {2, 6, 21, 41};
  std::vector<SplitRule> grid_splitrule = {SplitRule::gini, SplitRule::extratrees};
  std::vector<std::size_t> grid_min_node_size = {1, 5, 10};

  std::size_t smote_k = 5;
  std::size_t whatif_k = kDefaultWhatIfK;
  MocConfig moc;  // seed ignored; derived per request

  std::uint64_t master_seed = 1;
  std::optional<std::size_t> max_explained_instances = 50;  // nullopt = unlimited
  std::filesystem::path output_dir = "cfbench_out";

  // Throws on empty lists, unknown tokens, duplicate entries or a missing
  // data source.
  void validate() const;

  // Tuning grid for a dataset of width p (mtry capped at p, duplicates removed).
  std::vector<Hyperparams> tuning_grid(std::size_t p) const;

  // Canonical text form; equal configs give equal text.
  std::string canonical() const;
};

ExperimentConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cfbench
