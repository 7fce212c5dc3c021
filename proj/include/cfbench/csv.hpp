#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfbench {

// Minimal RFC 4180 reader: comma separated, optional double quotes with ""
// escapes, no embedded newlines. Enough for the OULAD exports and the files
// this project writes itself.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }

  // Index of a header column, or nullopt.
  std::optional<std::size_t> find(std::string_view column) const;
  // Index of a header column; throws Error naming the file when absent.
  std::size_t require(std::string_view column) const;

  // Next data row, or false at end of file. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);

  // 1-based data row number of the row last returned by next().
  std::size_t row_number() const { return row_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t row_ = 0;
};

void split_csv_line(std::string_view line, std::vector<std::string>& out);

// Parses the whole token as a finite double (surrounding blanks allowed).
std::optional<double> parse_real(std::string_view token);

}  // namespace cfbench
