#include "cfbench/oulad.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cfbench/csv.hpp"
#include "cfbench/error.hpp"
#include "cfbench/log.hpp"

namespace cfbench {

namespace {

constexpr const char* kStudentInfo = "studentInfo.csv";
constexpr const char* kStudentVle = "studentVle.csv";
constexpr const char* kVle = "vle.csv";

long parse_integer(const std::string& token, const CsvReader& reader, std::string_view column) {
  const auto v = parse_real(token);
  if (!v || *v != static_cast<double>(static_cast<long>(*v))) {
    throw Error(fmt::format("{}: row {}, column {}: expected an integer, got '{}'",
                            reader.path().string(), reader.row_number(), column, token));
  }
  return static_cast<long>(*v);
}

struct StudentKey {
  std::size_t presentation;  // position in the requested list
  long id;
  auto operator<=>(const StudentKey&) const = default;
};

}  // namespace

std::vector<std::string> week_column_names() {
  std::vector<std::string> names;
  names.reserve(kWeekColumns);
  for (int w = kFirstWeek; w <= kLastWeek; ++w) {
    names.push_back(w < 0 ? fmt::format("week_minus{}", -w) : fmt::format("week_{}", w));
  }
  return names;
}

int week_of_day(int day) {
  // floor division
  return day >= 0 ? day / 7 : -((-day + 6) / 7);
}

OuladFrame ingest_oulad(const std::filesystem::path& raw_dir, const std::string& course,
                        const std::vector<std::string>& presentations) {
  for (const char* name : {kStudentInfo, kStudentVle, kVle}) {
    if (!std::filesystem::exists(raw_dir / name)) {
      throw Error(fmt::format("missing OULAD file {} in {}", name, raw_dir.string()));
    }
  }
  if (presentations.empty()) throw Error("no presentations requested");
  auto presentation_index = [&](const std::string& code) -> std::optional<std::size_t> {
    const auto it = std::find(presentations.begin(), presentations.end(), code);
    if (it == presentations.end()) return std::nullopt;
    return static_cast<std::size_t>(it - presentations.begin());
  };

  IngestStats stats;
  std::map<StudentKey, Label> results;
  std::vector<bool> presentation_seen(presentations.size(), false);
  {
    CsvReader info(raw_dir / kStudentInfo);
    const auto c_module = info.require("code_module");
    const auto c_pres = info.require("code_presentation");
    const auto c_id = info.require("id_student");
    const auto c_result = info.require("final_result");
    std::vector<std::string> f;
    while (info.next(f)) {
      if (f.size() != info.header().size()) {
        throw Error(fmt::format("{}: row {} is malformed", info.path().string(), info.row_number()));
      }
      if (f[c_module] != course) continue;
      const auto pres = presentation_index(f[c_pres]);
      if (!pres) continue;
      presentation_seen[*pres] = true;
      ++stats.enrolled;
      const std::string& result = f[c_result];
      const StudentKey key{*pres, parse_integer(f[c_id], info, "id_student")};
      if (result == "Withdrawn") {
        ++stats.withdrawn;
        results.erase(key);
        continue;
      }
      if (result == "Pass" || result == "Distinction") {
        results[key] = Label::pass;
      } else if (result == "Fail") {
        results[key] = Label::fail;
      } else {
        throw Error(fmt::format("{}: row {}: unknown final_result '{}'", info.path().string(),
                                info.row_number(), result));
      }
    }
  }
  for (std::size_t k = 0; k < presentations.size(); ++k) {
    if (!presentation_seen[k]) {
      throw Error(fmt::format("course {} presentation {} not found in {}", course, presentations[k],
                              kStudentInfo));
    }
  }

  std::set<std::pair<std::size_t, long>> sites;
  {
    CsvReader vle(raw_dir / kVle);
    const auto c_site = vle.require("id_site");
    const auto c_module = vle.require("code_module");
    const auto c_pres = vle.require("code_presentation");
    std::vector<std::string> f;
    while (vle.next(f)) {
      if (f.size() != vle.header().size() || f[c_module] != course) continue;
      if (const auto pres = presentation_index(f[c_pres])) {
        sites.emplace(*pres, parse_integer(f[c_site], vle, "id_site"));
      }
    }
  }

  std::map<StudentKey, std::vector<double>> weeks;
  for (const auto& [key, label] : results) weeks.emplace(key, std::vector<double>(kWeekColumns, 0.0));
  std::set<StudentKey> orphans;
  {
    CsvReader log(raw_dir / kStudentVle);
    const auto c_module = log.require("code_module");
    const auto c_pres = log.require("code_presentation");
    const auto c_id = log.require("id_student");
    const auto c_site = log.require("id_site");
    const auto c_date = log.require("date");
    const auto c_clicks = log.require("sum_click");
    std::vector<std::string> f;
    while (log.next(f)) {
      if (f.size() != log.header().size()) {
        throw Error(fmt::format("{}: row {} is malformed", log.path().string(), log.row_number()));
      }
      if (f[c_module] != course) continue;
      const auto pres = presentation_index(f[c_pres]);
      if (!pres) continue;
      const StudentKey key{*pres, parse_integer(f[c_id], log, "id_student")};
      const auto it = weeks.find(key);
      if (it == weeks.end()) {
        orphans.insert(key);
        continue;
      }
      if (!sites.contains({*pres, parse_integer(f[c_site], log, "id_site")})) {
        ++stats.clicks_unknown_site;
        continue;
      }
      const int week = week_of_day(static_cast<int>(parse_integer(f[c_date], log, "date")));
      if (week < kFirstWeek || week > kLastWeek) {
        ++stats.clicks_outside_window;
        continue;
      }
      it->second[static_cast<std::size_t>(week - kFirstWeek)] +=
          static_cast<double>(parse_integer(f[c_clicks], log, "sum_click"));
    }
  }
  // Students with a result row but withdrawn are in neither map; orphans are
  // click-log students that have no usable result at all.
  {
    CsvReader info(raw_dir / kStudentInfo);
    const auto c_module = info.require("code_module");
    const auto c_pres = info.require("code_presentation");
    const auto c_id = info.require("id_student");
    std::vector<std::string> f;
    while (info.next(f)) {
      if (f[c_module] != course) continue;
      if (const auto pres = presentation_index(f[c_pres])) {
        orphans.erase(StudentKey{*pres, parse_integer(f[c_id], info, "id_student")});
      }
    }
  }
  stats.clicks_without_result = orphans.size();
  if (!orphans.empty()) {
    log_info("dropped {} students with click activity but no final result", orphans.size());
  }

  Matrix features;
  std::vector<Label> labels;
  std::vector<std::string> ids;
  for (const auto& [key, row] : weeks) {
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) ++stats.without_clicks;
    features.append_row(row);
    labels.push_back(results.at(key));
    ids.push_back(fmt::format("{}-{}", key.id, presentations[key.presentation]));
  }
  stats.kept = labels.size();
  if (stats.kept == 0) throw Error("no students left after filtering");
  log_info("ingested {} {}: {} enrolled, {} withdrawn, {} kept", course,
           fmt::join(presentations, "+"), stats.enrolled, stats.withdrawn, stats.kept);
  return OuladFrame{LabeledDataset(std::move(features), std::move(labels), week_column_names(),
                                   std::move(ids)),
                    stats};
}

}  // namespace cfbench
