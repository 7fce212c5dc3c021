#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfbench/cfgen.hpp"
#include "cfbench/distance.hpp"
#include "cfbench/forest.hpp"

namespace cfbench {

// One benchmark grid cell. Fields are the canonical lower-case tokens
// (e.g. "smote", "tuned", "nice_sp").
struct Cell {
  std::string balancing;
  std::string tuning;
  std::string method;

  std::string label() const { return balancing + ":" + tuning + ":" + method; }
  auto operator<=>(const Cell&) const = default;
};

// Quality of one counterfactual. Lower is better for every field except
// validity.
//   proximity    Gower(x, cf)
//   sparsity     number of features with cf_j != x_j
//   minimality   changed features whose reversion to x_j alone keeps the
//                model's pass label (0 for an invalid cf)
//   plausibility Gower distance from cf to the nearest training row
struct QualityRecord {
  int validity = 0;
  double proximity = 0.0;
  std::size_t sparsity = 0;
  std::size_t minimality = 0;
  double plausibility = 0.0;
  Cell cell;
  std::string request_id;
};

QualityRecord score(std::span<const double> x, const Counterfactual& cf, const RandomForestModel& model,
                    const LabeledDataset& train, const RangeTable& ranges);

inline constexpr std::array<std::string_view, 5> kMetricNames = {"validity", "proximity", "sparsity", "minimality",
                                                                 "plausibility"};

double metric_value(const QualityRecord& record, std::string_view metric);

struct MetricSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::size_t count = 0;
};

struct CellSummary {
  Cell cell;
  std::array<MetricSummary, kMetricNames.size()> metrics;  // in kMetricNames order

  const MetricSummary& metric(std::string_view name) const;
};

// Quantile with linear interpolation between order statistics
// (position (n - 1) * q in the sorted sample).
double quantile(std::vector<double> values, double q);

// One summary per cell, cells in sorted order.
std::vector<CellSummary> aggregate(std::span<const QualityRecord> records);

struct CellCounterfactual {
  Cell cell;
  Counterfactual cf;
};

std::map<Cell, std::size_t> count_by_cell(std::span<const CellCounterfactual> cfs);

// quality_records.csv: balancing,tuning,method,request_id,validity,proximity,
// sparsity,minimality,plausibility
void write_quality_records(std::span<const QualityRecord> records, const std::filesystem::path& path);
std::vector<QualityRecord> read_quality_records(const std::filesystem::path& path);

// cell_summaries.csv: balancing,tuning,method,metric,median,q1,q3,count
void write_cell_summaries(std::span<const CellSummary> summaries, const std::filesystem::path& path);

}  // namespace cfbench
