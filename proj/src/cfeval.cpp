#include "cfbench/cfeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "cfbench/csv.hpp"
#include "cfbench/error.hpp"

namespace cfbench {

QualityRecord score(std::span<const double> x, const Counterfactual& cf, const RandomForestModel& model,
                    const LabeledDataset& train, const RangeTable& ranges) {
  if (x.size() != cf.values.size() || x.size() != model.n_features() || x.size() != train.cols()) {
    throw Error("score: dimension mismatch");
  }
  QualityRecord r;
  r.request_id = cf.request_id;
  r.validity = model.predict(cf.values) == Label::pass ? 1 : 0;
  r.proximity = gower(x, cf.values, ranges);
  Instance reverted = cf.values;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (cf.values[j] == x[j]) continue;
    ++r.sparsity;
    if (r.validity == 0) continue;
    reverted[j] = x[j];
    if (model.predict(reverted) == Label::pass) ++r.minimality;
    reverted[j] = cf.values[j];
  }
  r.plausibility = k_nearest(cf.values, train.features(), Metric::gower, 1, ranges).front().distance;
  return r;
}

double metric_value(const QualityRecord& record, std::string_view metric) {
  if (metric == "validity") return record.validity;
  if (metric == "proximity") return record.proximity;
  if (metric == "sparsity") return static_cast<double>(record.sparsity);
  if (metric == "minimality") return static_cast<double>(record.minimality);
  if (metric == "plausibility") return record.plausibility;
  throw Error(fmt::format("unknown metric '{}'", metric));
}

const MetricSummary& CellSummary::metric(std::string_view name) const {
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    if (kMetricNames[m] == name) return metrics[m];
  }
  throw Error(fmt::format("unknown metric '{}'", name));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<CellSummary> aggregate(std::span<const QualityRecord> records) {
  if (records.empty()) throw Error("aggregate: no records");
  std::map<Cell, std::vector<const QualityRecord*>> groups;
  for (const auto& r : records) groups[r.cell].push_back(&r);
  std::vector<CellSummary> out;
  for (const auto& [cell, members] : groups) {
    CellSummary s;
    s.cell = cell;
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      std::vector<double> values;
      values.reserve(members.size());
      for (const auto* r : members) values.push_back(metric_value(*r, kMetricNames[m]));
      s.metrics[m] = MetricSummary{quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75),
                                   values.size()};
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::map<Cell, std::size_t> count_by_cell(std::span<const CellCounterfactual> cfs) {
  std::map<Cell, std::size_t> counts;
  for (const auto& c : cfs) ++counts[c.cell];
  return counts;
}

void write_quality_records(std::span<const QualityRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "balancing,tuning,method,request_id,validity,proximity,sparsity,minimality,plausibility\n";
  for (const auto& r : records) {
    out << r.cell.balancing << ',' << r.cell.tuning << ',' << r.cell.method << ',' << r.request_id << ','
        << r.validity << ',' << format_real(r.proximity) << ',' << r.sparsity << ',' << r.minimality << ','
        << format_real(r.plausibility) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<QualityRecord> read_quality_records(const std::filesystem::path& path) {
  CsvReader reader(path);
  const auto c_bal = reader.require("balancing");
  const auto c_tun = reader.require("tuning");
  const auto c_met = reader.require("method");
  const auto c_req = reader.require("request_id");
  const auto c_val = reader.require("validity");
  const auto c_pro = reader.require("proximity");
  const auto c_spa = reader.require("sparsity");
  const auto c_min = reader.require("minimality");
  const auto c_pla = reader.require("plausibility");
  std::vector<QualityRecord> records;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != reader.header().size()) {
      throw Error(fmt::format("{}: row {} is malformed", path.string(), reader.row_number()));
    }
    auto num = [&](std::size_t c) {
      const auto v = parse_real(f[c]);
      if (!v) {
        throw Error(fmt::format("{}: row {}, column {}: bad number '{}'", path.string(), reader.row_number(),
                                reader.header()[c], f[c]));
      }
      return *v;
    };
    QualityRecord r;
    r.cell = Cell{f[c_bal], f[c_tun], f[c_met]};
    r.request_id = f[c_req];
    r.validity = static_cast<int>(num(c_val));
    r.proximity = num(c_pro);
    r.sparsity = static_cast<std::size_t>(num(c_spa));
    r.minimality = static_cast<std::size_t>(num(c_min));
    r.plausibility = num(c_pla);
    records.push_back(std::move(r));
  }
  return records;
}

void write_cell_summaries(std::span<const CellSummary> summaries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "balancing,tuning,method,metric,median,q1,q3,count\n";
  for (const auto& s : summaries) {
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      const auto& ms = s.metrics[m];
      out << s.cell.balancing << ',' << s.cell.tuning << ',' << s.cell.method << ',' << kMetricNames[m] << ','
          << format_real(ms.median) << ',' << format_real(ms.q1) << ',' << format_real(ms.q3) << ',' << ms.count
          << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace cfbench
