#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cfbench/dataset.hpp"
#include "cfbench/forest.hpp"
#include "cfbench/rng.hpp"

namespace cfbench::testing {

inline LabeledDataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<Label>& labels) {
  Matrix m(0, rows.front().size());
  for (const auto& r : rows) m.append_row(r);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < rows.front().size(); ++j) names.push_back("f" + std::to_string(j + 1));
  return LabeledDataset(std::move(m), labels, names);
}

// n rows, p uniform features in [0, 10); label fail with probability fail_rate.
inline LabeledDataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed, double fail_rate = 0.3) {
  Rng rng(seed);
  Matrix m(0, p);
  std::vector<Label> labels;
  std::vector<double> row(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = std::floor(rng.uniform01() * 100.0) / 10.0;
    m.append_row(row);
    labels.push_back(rng.bernoulli(fail_rate) ? Label::fail : Label::pass);
  }
  // make sure both classes exist
  labels[0] = Label::fail;
  labels[1] = Label::pass;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j + 1));
  return LabeledDataset(std::move(m), std::move(labels), names);
}

// Learnable data: fail iff a noisy linear score is low.
inline LabeledDataset signal_dataset(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(0, p);
  std::vector<Label> labels;
  std::vector<double> row(p);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      row[j] = std::round(rng.uniform01() * 20.0);
      if (j < 3) s += row[j];
    }
    s += rng.normal() * 4.0;
    m.append_row(row);
    labels.push_back(s < 24.0 ? Label::fail : Label::pass);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j + 1));
  return LabeledDataset(std::move(m), std::move(labels), names);
}

// One-tree model: pass iff x[feature] >= cut.
inline RandomForestModel threshold_model(std::size_t p, std::size_t feature, double cut) {
  return RandomForestModel({DecisionTree::stump(feature, std::nextafter(cut, -INFINITY), 1.0, 0.0)}, p);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cfbench_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace cfbench::testing
