#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "cfbench/dataset.hpp"

namespace cfbench {

inline constexpr int kFirstWeek = -4;
inline constexpr int kLastWeek = 37;
inline constexpr std::size_t kWeekColumns = kLastWeek - kFirstWeek + 1;  // 42

// week_minus4 ... week_minus1, week_0 ... week_37
std::vector<std::string> week_column_names();

// Week index of a course day: week k covers days [7k, 7k + 6].
int week_of_day(int day);

struct IngestStats {
  std::size_t enrolled = 0;           // student-presentation rows matching the filter
  std::size_t withdrawn = 0;          // dropped: final_result Withdrawn
  std::size_t kept = 0;               // rows in the output frame
  std::size_t without_clicks = 0;     // kept with all-zero weeks
  std::size_t clicks_without_result = 0;  // students in the click log with no result row
  std::size_t clicks_outside_window = 0;  // log rows before week_minus4 or after week_37
  std::size_t clicks_unknown_site = 0;    // log rows whose site is not in the VLE metadata
};

struct OuladFrame {
  LabeledDataset data;
  IngestStats stats;
};

// Builds the weekly click frame from the raw OULAD exports in raw_dir
// (studentInfo.csv, studentVle.csv, vle.csv). Distinction is merged into
// pass, Withdrawn rows are dropped. Row ids are `<id_student>-<presentation>`.
OuladFrame ingest_oulad(const std::filesystem::path& raw_dir, const std::string& course,
                        const std::vector<std::string>& presentations);

}  // namespace cfbench
