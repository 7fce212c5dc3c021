#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfbench {

// Binary target. fail is the minority class of interest and the positive
// class for F1 and AUC.
enum class Label : std::uint8_t { fail = 0, pass = 1 };

std::string_view to_string(Label label);
Label parse_label(std::string_view token);

// A single observation. Length always equals the owning dataset's width.
using Instance = std::vector<double>;

struct FeatureSpec {
  std::string name;
  double min = 0.0;
  double max = 0.0;

  double width() const { return max - min; }
  bool is_constant() const { return max == min; }
};

// Dense row-major matrix of reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::vector<double> data, std::size_t cols);

  std::size_t rows() const { return cols_ == 0 ? 0 : data_.size() / cols_; }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  void append_row(std::span<const double> values);
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::vector<double> data_;
  std::size_t cols_ = 0;
};

// Immutable labelled frame. Feature ranges are recomputed from the stored
// values on construction so the specs always cover the data.
class LabeledDataset {
 public:
  // Throws Error on n == 0, p == 0, shape mismatches or non-finite values.
  LabeledDataset(Matrix features, std::vector<Label> labels, std::vector<std::string> feature_names,
                 std::vector<std::string> row_ids = {});

  std::size_t rows() const { return features_.rows(); }
  std::size_t cols() const { return features_.cols(); }

  const Matrix& features() const { return features_; }
  std::span<const double> row(std::size_t i) const { return features_.row(i); }
  Instance instance(std::size_t i) const;
  Label label(std::size_t i) const { return labels_[i]; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<FeatureSpec>& specs() const { return specs_; }
  std::vector<std::string> feature_names() const;

  // Row identifiers. Synthesised as the 0-based row number when the source
  // had none.
  const std::vector<std::string>& row_ids() const { return row_ids_; }

  std::size_t count(Label label) const;

  // Rows in the given order; indices may repeat.
  LabeledDataset subset(std::span<const std::size_t> indices) const;

 private:
  Matrix features_;
  std::vector<Label> labels_;
  std::vector<FeatureSpec> specs_;
  std::vector<std::string> row_ids_;
};

struct SplitResult {
  LabeledDataset train;
  LabeledDataset test;
  std::uint64_t seed = 0;
  // Row positions in the input dataset, ascending.
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

inline constexpr std::string_view kLabelColumn = "final_result";
inline constexpr std::string_view kIdColumn = "student_id";

// Reads a CSV with a header row. Feature columns are taken in the order of
// expected_columns (all columns except the id and label columns when the list
// is empty). The label column must be `final_result`; a `student_id` column is
// kept as the row id when present. Other columns are ignored.
LabeledDataset load_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& expected_columns = {});

// Writes `student_id,<features...>,final_result` with round-trip precision.
void write_csv(const LabeledDataset& data, const std::filesystem::path& path);

// Per-class test size is round(fraction * class size), clamped so both parts
// keep at least one member of each class.
SplitResult stratified_split(const LabeledDataset& data, double test_fraction, std::uint64_t seed);

// Majority count over minority count.
double imbalance_ratio(const LabeledDataset& data);

// Formats a double so that parsing it back yields the same value.
std::string format_real(double value);

}  // namespace cfbench
