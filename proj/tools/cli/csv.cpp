#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "units.hpp"

namespace sqz::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> full_number(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::size_t CsvDocument::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw DataError(source + ": missing column '" + std::string(name) + "'");
}

void CsvDocument::fail(std::size_t row, const std::string& message) const {
  throw DataError(source + ":" + std::to_string(line_numbers.at(row)) + ": " + message);
}

double CsvDocument::number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  const auto v = full_number(cell);
  if (!v || !std::isfinite(*v)) fail(row, "column '" + columns[col] + "': '" + cell + "' is not a finite number");
  return *v;
}

const std::string& CsvDocument::text(std::size_t row, std::size_t col) const { return rows.at(row).at(col); }

std::optional<std::string> CsvDocument::meta(const std::string& key) const {
  const auto it = metadata.find(key);
  if (it == metadata.end()) return std::nullopt;
  return it->second;
}

double CsvDocument::meta_number(const std::string& key) const {
  const auto text = meta(key);
  if (!text) throw DataError(source + ": missing '# " + key + "=' header line");
  const auto v = full_number(*text);
  if (!v || std::isnan(*v)) throw DataError(source + ": header '" + key + "' is not a number: '" + *text + "'");
  return *v;
}

CsvDocument parse_csv(std::string_view content, std::string source) {
  CsvDocument doc;
  doc.source = std::move(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const std::string_view raw = content.substr(pos, nl == std::string_view::npos ? content.npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string_view::npos && doc.columns.empty())
        doc.metadata[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      continue;
    }
    auto cells = split(line);
    if (doc.columns.empty()) {
      doc.columns = std::move(cells);
      continue;
    }
    if (cells.size() != doc.columns.size())
      throw DataError(doc.source + ":" + std::to_string(line_no) + ": expected " + std::to_string(doc.columns.size()) +
                      " fields, found " + std::to_string(cells.size()));
    doc.rows.push_back(std::move(cells));
    doc.line_numbers.push_back(line_no);
  }
  if (doc.columns.empty()) throw DataError(doc.source + ": no header row");
  if (doc.rows.empty()) throw DataError(doc.source + ": no data rows");
  return doc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvDocument read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

void require_columns(const CsvDocument& doc, const std::vector<std::string>& expected) {
  if (doc.columns == expected) return;
  std::string want, got;
  for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
  for (const auto& c : doc.columns) got += (got.empty() ? "" : ",") + c;
  throw DataError(doc.source + ": header is '" + got + "', expected '" + want + "'");
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

nlohmann::ordered_json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return format_number(*d);
    return *d;
  }
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (const auto& [k, v] : table.metadata) out += "# " + k + "=" + v + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
    out += "\n";
  }
  return out;
}

std::string to_json(const Table& table) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  if (!table.metadata.empty()) {
    auto& meta = doc["metadata"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : table.metadata) {
      const auto num = full_number(v);
      if (num && std::isfinite(*num))
        meta[k] = *num;
      else
        meta[k] = v;
    }
  }
  auto& data = doc["data"] = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = cell_json(row[i]);
    data.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

}  // namespace sqz::cli
