#include "cfbench/csv.hpp"

#include <charconv>
#include <cmath>

#include "cfbench/error.hpp"

namespace cfbench {

void split_csv_line(std::string_view line, std::vector<std::string>& out) {
  out.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
}

CsvReader::CsvReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!std::filesystem::exists(path)) throw Error("file not found: " + path.string());
  if (!in_) throw Error("cannot open file: " + path.string());
  std::string line;
  while (std::getline(in_, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    split_csv_line(line, header_);
    for (auto& h : header_) {
      const auto b = h.find_first_not_of(' ');
      const auto e = h.find_last_not_of(' ');
      h = b == std::string::npos ? std::string{} : h.substr(b, e - b + 1);
    }
    return;
  }
  throw Error("empty file: " + path.string());
}

std::optional<std::size_t> CsvReader::find(std::string_view column) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == column) return i;
  }
  return std::nullopt;
}

std::size_t CsvReader::require(std::string_view column) const {
  if (auto idx = find(column)) return *idx;
  throw Error(path_.string() + ": missing column '" + std::string(column) + "'");
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row_;
    split_csv_line(line, fields);
    return true;
  }
  return false;
}

std::optional<double> parse_real(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace cfbench
