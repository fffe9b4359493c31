#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace trimsum::cli::io {

/// %.17g; non-finite values print as nan, inf, -inf.
std::string num(double v);
std::string num(std::size_t v);

std::string csv_field(const std::string& field);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add(std::vector<std::string> row);
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept {
    return rows_;
  }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parses RFC-4180 text; the first record becomes the header.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void ensure_dir(const std::filesystem::path& dir);

/// Column index by name; ingestion error when missing.
std::size_t column(const CsvTable& table, const std::string& name);
double to_double(const std::string& field);

}  // namespace trimsum::cli::io
