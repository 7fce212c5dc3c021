#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cfbench {

// Generator for raw files in the OULAD export layout (studentInfo.csv,
// studentVle.csv, vle.csv). Students carry a latent engagement level that
// drives both their weekly click volume and their final result, so a forest
// trained on the ingested frame has signal comparable to the real course.
// Intended for tests and demos when the real data is not available.
struct SyntheticOuladSpec {
  std::string course = "DDD";
  std::vector<std::string> presentations = {"2013J", "2014J"};
  std::size_t students_per_presentation = 600;
  double withdrawn_fraction = 0.35;
  // Fraction of non-withdrawn students that pass.
  double pass_fraction = 0.70;
  std::size_t sites_per_presentation = 40;
  std::uint64_t seed = 1;
};

struct SyntheticOuladSummary {
  std::size_t enrolled = 0;
  std::size_t withdrawn = 0;
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t log_rows = 0;
};

SyntheticOuladSummary write_synthetic_oulad(const std::filesystem::path& dir, const SyntheticOuladSpec& spec);

}  // namespace cfbench
