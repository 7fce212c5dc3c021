#include "cfbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "cfbench/error.hpp"
#include "cfbench/rng.hpp"

namespace cfbench {

namespace {

// Knuth for small means, normal approximation above.
long poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 30.0) return std::max(0L, std::lround(mean + std::sqrt(mean) * rng.normal()));
  const double limit = std::exp(-mean);
  long k = 0;
  double prod = rng.uniform01();
  while (prod > limit) {
    ++k;
    prod *= rng.uniform01();
  }
  return k;
}

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

SyntheticOuladSummary write_synthetic_oulad(const std::filesystem::path& dir, const SyntheticOuladSpec& spec) {
  std::filesystem::create_directories(dir);
  Rng rng(spec.seed);
  SyntheticOuladSummary summary;

  auto vle = open(dir / "vle.csv");
  vle << "\"id_site\",\"code_module\",\"code_presentation\",\"activity_type\",\"week_from\",\"week_to\"\n";
  auto info = open(dir / "studentInfo.csv");
  info << "\"code_module\",\"code_presentation\",\"id_student\",\"gender\",\"region\",\"highest_education\","
          "\"imd_band\",\"age_band\",\"num_of_prev_attempts\",\"studied_credits\",\"disability\",\"final_result\"\n";
  auto log = open(dir / "studentVle.csv");
  log << "\"code_module\",\"code_presentation\",\"id_student\",\"id_site\",\"date\",\"sum_click\"\n";

  // A distractor module that must be filtered out.
  vle << fmt::format("\"{}\",\"AAA\",\"2013J\",\"resource\",\"\",\"\"\n", 1);
  info << "\"AAA\",\"2013J\",\"1\",\"M\",\"East Anglian Region\",\"HE Qualification\",\"90-100%\",\"55<=\",\"0\","
          "\"240\",\"N\",\"Pass\"\n";
  log << "\"AAA\",\"2013J\",\"1\",\"1\",\"-10\",\"4\"\n";

  // Shared course rhythm: heavier weeks around assessments.
  std::vector<double> rhythm;
  for (int w = -4; w <= 37; ++w) {
    double base = w < 0 ? 0.25 + 0.08 * (w + 4) : 1.0 - 0.012 * w;
    if (w >= 0 && w % 6 == 4) base *= 1.8;
    rhythm.push_back(std::max(0.15, base));
  }

  long next_student = 100000;
  long next_site = 500000;
  for (const auto& pres : spec.presentations) {
    std::vector<long> sites;
    for (std::size_t s = 0; s < spec.sites_per_presentation; ++s) {
      sites.push_back(next_site);
      vle << fmt::format("\"{}\",\"{}\",\"{}\",\"{}\",\"\",\"\"\n", next_site, spec.course, pres,
                         s % 3 == 0 ? "forumng" : s % 3 == 1 ? "resource" : "oucontent");
      ++next_site;
    }
    for (std::size_t k = 0; k < spec.students_per_presentation; ++k) {
      const long id = next_student++;
      ++summary.enrolled;
      const double ability = rng.normal();
      std::string result;
      if (rng.bernoulli(spec.withdrawn_fraction)) {
        result = "Withdrawn";
        ++summary.withdrawn;
      } else {
        // Logistic link calibrated so roughly pass_fraction of students pass.
        const double offset = std::log(spec.pass_fraction / (1.0 - spec.pass_fraction)) * 1.6;
        const double z = 2.4 * ability + offset + 1.0 * rng.normal();
        const bool pass = z > 0.0;
        if (pass) {
          result = rng.bernoulli(0.2) ? "Distinction" : "Pass";
          ++summary.pass;
        } else {
          result = "Fail";
          ++summary.fail;
        }
      }
      info << fmt::format("\"{}\",\"{}\",\"{}\",\"F\",\"Scotland\",\"A Level or Equivalent\",\"20-30%\","
                          "\"0-35\",\"0\",\"60\",\"N\",\"{}\"\n",
                          spec.course, pres, id, result);

      const double level = std::exp(0.9 * ability + 0.5 * rng.normal()) * 18.0;
      // Weaker students fade out; the fade week is earlier for lower ability.
      const double fade_week = 14.0 + 14.0 * ability + 6.0 * rng.normal();
      const int last_day = result == "Withdrawn" ? static_cast<int>(rng.index(200)) - 20 : 275;
      for (int w = -5; w <= 38; ++w) {
        const std::size_t ri = static_cast<std::size_t>(std::clamp(w, -4, 37) + 4);
        double mean = level * rhythm[ri];
        if (w > fade_week) mean *= 0.25;
        if (rng.bernoulli(0.15)) mean = 0.0;  // idle week
        for (int d = 0; d < 7; ++d) {
          const int day = 7 * w + d;
          if (day > last_day) break;
          if (!rng.bernoulli(0.45)) continue;
          const long clicks = poisson(rng, mean / 3.2);
          if (clicks == 0) continue;
          const long site = sites[rng.index(sites.size())];
          log << fmt::format("\"{}\",\"{}\",\"{}\",\"{}\",\"{}\",\"{}\"\n", spec.course, pres, id, site, day,
                             clicks);
          ++summary.log_rows;
        }
      }
    }
  }
  // A click-log student without a studentInfo row.
  log << fmt::format("\"{}\",\"{}\",\"{}\",\"{}\",\"3\",\"2\"\n", spec.course, spec.presentations.front(),
                     next_student + 1, next_site - 1);
  ++summary.log_rows;
  return summary;
}

}  // namespace cfbench
