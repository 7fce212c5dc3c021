#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfbench/cfeval.hpp"
#include "cfbench/cfgen.hpp"
#include "cfbench/config.hpp"
#include "cfbench/distance.hpp"
#include "cfbench/forest.hpp"
#include "cfbench/oulad.hpp"

namespace cfbench {

// Seed for one stage of one cell:
//   h = FNV-1a 64 over "balancing\x1ftuning\x1fmethod\x1fstage"
//   seed = mix64(master ^ mix64(h))
// Stages shared by several cells use "*" for the unused fields.
std::uint64_t seed_for(std::uint64_t master_seed, const Cell& cell, std::string_view stage);

// FNV-1a 64 of text, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

std::uint64_t effective_split_seed(const ExperimentConfig& cfg);

struct PreparedData {
  LabeledDataset data;
  SplitResult split;
  RangeTable ranges;  // from the unbalanced training set, shared by every cell
  std::optional<IngestStats> ingest;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

struct BalancedTrain {
  LabeledDataset train;
  ClassWeights weights;
};

// Resampled copy for the data-based strategies; the original set with cost
// weights for cost_sensitive.
BalancedTrain balance_for(const ExperimentConfig& cfg, const LabeledDataset& train, std::string_view balancing);

struct TrainedModel {
  RandomForestModel model;
  Hyperparams hp;
  std::vector<double> cv_scores;  // empty for vanilla
};

TrainedModel train_model(const ExperimentConfig& cfg, const BalancedTrain& balanced, std::string_view balancing,
                         std::string_view tuning);

// Test rows the model labels fail, in row order, capped by the config.
// Bounds come from bounds_source.
std::vector<CfRequest> select_requests(const ExperimentConfig& cfg, const RandomForestModel& model,
                                       const LabeledDataset& test, const LabeledDataset& bounds_source);

// Runs one method on one request. request_index feeds the MOC seed.
std::vector<Counterfactual> generate(const ExperimentConfig& cfg, const Cell& cell, const CfRequest& req,
                                     std::size_t request_index, const PredictedPool& pool, const RangeTable& ranges);

struct CellRecord {
  Cell cell;
  std::string status = "not_run";  // completed | failed | not_run
  bool reused = false;             // outputs carried over from an earlier run
  std::size_t requests = 0;
  std::size_t counterfactuals = 0;
  double seconds = 0.0;
  std::string error;
  std::vector<std::string> files;  // relative to the output directory
};

struct ModelRecord {
  std::string balancing;
  std::string tuning;
  std::string status = "not_run";
  bool reused = false;
  std::size_t train_rows = 0;
  ClassWeights weights;
  Hyperparams hp;
  std::vector<double> cv_scores;
  EvalMetrics metrics;
  double seconds = 0.0;
  std::string error;
  std::string model_file;
};

struct RunManifest {
  std::string config_hash;
  std::string config_text;
  std::uint64_t split_seed = 0;
  std::size_t rows = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t test_fail = 0;
  std::size_t test_pass = 0;
  std::vector<ModelRecord> models;
  std::vector<CellRecord> cells;  // grid order: balancing, tuning, method
  std::vector<std::string> files;
  double seconds = 0.0;

  const CellRecord* find(const Cell& cell) const;
  const ModelRecord* find_model(std::string_view balancing, std::string_view tuning) const;

  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

struct RunOptions {
  // Restricts computation to one cell; other cells keep earlier outputs.
  std::optional<Cell> only;
};

// Runs the grid and writes, under cfg.output_dir:
//   performance.csv, counts.csv, hyperparameters.csv, quality_records.csv,
//   cell_summaries.csv, manifest.json, models/<b>__<t>/model.txt and
//   cells/<b>__<t>__<m>/{counterfactuals.csv, meta.jsonl, quality_records.csv}.
// Cells recorded as completed by a manifest with the same config hash, whose
// files still exist, are skipped.
RunManifest run(const ExperimentConfig& cfg, const RunOptions& options = {});

// Rebuilds quality_records.csv and cell_summaries.csv of an output directory
// from its per-cell records.
std::vector<CellSummary> report(const std::filesystem::path& output_dir);

Cell parse_cell(std::string_view text);

}  // namespace cfbench
