#include "io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "trimsum/cli.hpp"
#include "trimsum/error.hpp"

namespace trimsum::cli {
namespace io {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(std::size_t v) { return std::to_string(v); }

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(std::vector<std::string> row) {
  require(row.size() == header_.size(), ErrorKind::precondition,
          "CSV row width does not match the header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << ',';
      out << csv_field(r[i]);
    }
    out << "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  write_text(path, str());
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      field.clear();
      record.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) fail(ErrorKind::ingestion, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) fail(ErrorKind::ingestion, "CSV input has no header");
  CsvTable table(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header().size())
      fail(ErrorKind::ingestion,
           "CSV record " + std::to_string(r + 1) + " has the wrong width");
    table.add(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text(path));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ingestion, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::configuration, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::configuration, "write failed for " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    fail(ErrorKind::configuration, "cannot create directory " + dir.string());
}

std::size_t column(const CsvTable& table, const std::string& name) {
  const auto& h = table.header();
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] == name) return i;
  fail(ErrorKind::ingestion, "CSV has no column '" + name + "'");
}

double to_double(const std::string& field) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorKind::ingestion, "not a number: '" + field + "'");
  return v;
}

}  // namespace io

namespace {

std::string trim_ws(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<double> read_data(std::istream& in) {
  std::vector<double> values;
  std::vector<std::size_t> bad_lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos)
      view = view.substr(0, hash);
    const auto text = trim_ws(view);
    if (text.empty()) continue;
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
      bad_lines.push_back(lineno);
      continue;
    }
    values.push_back(v);
  }
  if (!bad_lines.empty()) {
    std::ostringstream msg;
    msg << "non-numeric data on line";
    if (bad_lines.size() > 1) msg << 's';
    for (std::size_t i = 0; i < bad_lines.size(); ++i)
      msg << (i ? ", " : " ") << bad_lines[i];
    fail(ErrorKind::ingestion, msg.str());
  }
  return values;
}

std::vector<double> read_data_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ingestion, "cannot open data file " + path.string());
  return read_data(in);
}

}  // namespace trimsum::cli
