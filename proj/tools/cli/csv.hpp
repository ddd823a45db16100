#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sqz::cli {

/// Malformed or invalid input data (exit code 1).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parsed CSV file: `# key=value` metadata lines, a header row, then rows
/// of cells. Line numbers are kept for diagnostics.
struct CsvDocument {
  std::string source;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
  const std::string& text(std::size_t row, std::size_t col) const;
  std::optional<std::string> meta(const std::string& key) const;
  double meta_number(const std::string& key) const;

  [[noreturn]] void fail(std::size_t row, const std::string& message) const;
};

CsvDocument parse_csv(std::string_view content, std::string source);
CsvDocument read_csv(const std::string& path);

/// Rejects documents whose header differs from `expected`.
void require_columns(const CsvDocument& doc, const std::vector<std::string>& expected);

/// Output table shared by the CSV and JSON writers.
using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string to_csv(const Table& table);
std::string to_json(const Table& table);

std::string read_file(const std::string& path);

}  // namespace sqz::cli
