#include "units.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sqz::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool prefix_scale(std::string_view prefix, double& scale) {
  if (prefix.empty()) return scale = 1.0, true;
  if (prefix == "p") return scale = 1e-12, true;
  if (prefix == "n") return scale = 1e-9, true;
  if (prefix == "u" || prefix == "\xC2\xB5") return scale = 1e-6, true;
  if (prefix == "m") return scale = 1e-3, true;
  if (prefix == "k") return scale = 1e3, true;
  if (prefix == "M") return scale = 1e6, true;
  if (prefix == "G") return scale = 1e9, true;
  return false;
}

// Leading floating-point number; returns the remaining suffix.
std::string_view split_number(std::string_view text, double& value) {
  const auto* first = text.data();
  const auto* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || !std::isfinite(value))
    throw std::invalid_argument("'" + std::string(text) + "' is not a number");
  return trim(std::string_view(res.ptr, static_cast<std::size_t>(last - res.ptr)));
}

}  // namespace

double parse_quantity(std::string_view text, std::string_view unit) {
  text = trim(text);
  double value = 0.0;
  const std::string_view suffix = split_number(text, value);
  if (suffix.empty()) return value;
  double scale = 1.0;
  if (!unit.empty() && suffix.ends_with(unit) && prefix_scale(suffix.substr(0, suffix.size() - unit.size()), scale))
    return value * scale;
  if (unit.empty() && prefix_scale(suffix, scale)) return value * scale;
  throw std::invalid_argument("'" + std::string(text) + "': expected a value in " +
                              (unit.empty() ? std::string("plain numbers") : std::string(unit)));
}

double parse_ratio_or_db(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const std::string_view suffix = split_number(text, value);
  if (suffix.empty()) return value;
  if (suffix == "dB") return std::pow(10.0, value / 10.0);
  throw std::invalid_argument("'" + std::string(text) + "': expected a linear ratio or a value in dB");
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace sqz::cli
