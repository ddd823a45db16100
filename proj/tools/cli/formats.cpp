#include "formats.hpp"

#include <cmath>

#include "units.hpp"

namespace sqz::cli {

namespace {

double db_to_ratio(double db) {
  double r = 0.0;
  check(sqz_ratio_from_db(db, &r));
  return r;
}

double ratio_to_db(double r) {
  double db = 0.0;
  check(sqz_db_from_ratio(r, &db));
  return db;
}

}  // namespace

sqz_quadrature parse_quadrature(const std::string& text) {
  if (text == "squeezed") return SQZ_SQUEEZED;
  if (text == "antisqueezed") return SQZ_ANTISQUEEZED;
  throw DataError("unknown quadrature '" + text + "' (expected squeezed or antisqueezed)");
}

const char* quadrature_name(sqz_quadrature q) { return q == SQZ_SQUEEZED ? "squeezed" : "antisqueezed"; }

std::vector<sqz_gain_point> read_gain(const CsvDocument& doc) {
  require_columns(doc, {"pump_power_w", "gain", "power_frac_err"});
  std::vector<sqz_gain_point> out;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const sqz_gain_point p{doc.number(r, 0), doc.number(r, 1), doc.number(r, 2)};
    if (p.pump_power < 0.0) doc.fail(r, "pump power must be non-negative");
    if (!(p.gain > 0.0)) doc.fail(r, "gain must be positive");
    if (p.power_fractional_uncertainty < 0.0) doc.fail(r, "power uncertainty must be non-negative");
    out.push_back(p);
  }
  return out;
}

Table gain_table(const std::vector<sqz_gain_point>& points) {
  Table t;
  t.columns = {"pump_power_w", "gain", "power_frac_err"};
  for (const auto& p : points) t.rows.push_back({p.pump_power, p.gain, p.power_fractional_uncertainty});
  return t;
}

TracePtr read_trace(const CsvDocument& doc) {
  require_columns(doc, {"frequency_hz", "variance_db_rel_shot"});
  const double power = doc.meta_number("pump_power_w");
  const auto q_text = doc.meta("quadrature");
  if (!q_text) throw DataError(doc.source + ": missing '# quadrature=' header line");
  sqz_quadrature q;
  try {
    q = parse_quadrature(*q_text);
  } catch (const DataError& e) {
    throw DataError(doc.source + ": " + e.what());
  }
  sqz_trace* raw = nullptr;
  try {
    check(sqz_trace_create(power, q, &raw));
  } catch (const DataError& e) {
    throw DataError(doc.source + ": " + e.what());
  }
  TracePtr trace(raw);
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    if (sqz_trace_append(trace.get(), doc.number(r, 0), db_to_ratio(doc.number(r, 1))) != SQZ_OK)
      doc.fail(r, sqz_last_error());
  }
  auto optional_meta = [&](const char* key) { return doc.meta(key) ? doc.meta_number(key) : -1.0; };
  if (sqz_trace_set_metadata(trace.get(), optional_meta("rbw_hz"), optional_meta("vbw_hz"),
                             optional_meta("averages")) != SQZ_OK)
    throw DataError(doc.source + ": " + sqz_last_error());
  return trace;
}

Table trace_table(const sqz_trace* trace, std::vector<std::pair<std::string, std::string>> extra_metadata) {
  Table t;
  t.metadata.emplace_back("pump_power_w", format_number(sqz_trace_pump_power(trace)));
  t.metadata.emplace_back("quadrature", quadrature_name(sqz_trace_quadrature(trace)));
  double rbw = NAN, vbw = NAN, avg = NAN;
  check(sqz_trace_get_metadata(trace, &rbw, &vbw, &avg));
  if (!std::isnan(rbw)) t.metadata.emplace_back("rbw_hz", format_number(rbw));
  if (!std::isnan(vbw)) t.metadata.emplace_back("vbw_hz", format_number(vbw));
  if (!std::isnan(avg)) t.metadata.emplace_back("averages", format_number(avg));
  for (auto& kv : extra_metadata) t.metadata.push_back(std::move(kv));
  t.columns = {"frequency_hz", "variance_db_rel_shot"};
  for (std::size_t i = 0; i < sqz_trace_size(trace); ++i) {
    double f = 0.0, v = 0.0;
    check(sqz_trace_point(trace, i, &f, &v));
    t.rows.push_back({f, ratio_to_db(v)});
  }
  return t;
}

SweepData read_sweep(const CsvDocument& doc) {
  require_columns(doc, {"pump_power_w", "quadrature", "variance_db_rel_shot"});
  SweepData out;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const double p = doc.number(r, 0);
    if (p < 0.0) doc.fail(r, "pump power must be non-negative");
    sqz_quadrature q;
    try {
      q = parse_quadrature(doc.text(r, 1));
    } catch (const DataError& e) {
      doc.fail(r, e.what());
    }
    const sqz_sweep_point pt{p, db_to_ratio(doc.number(r, 2))};
    (q == SQZ_SQUEEZED ? out.squeezed : out.antisqueezed).push_back(pt);
  }
  return out;
}

Table sweep_table(const SweepData& data) {
  Table t;
  t.columns = {"pump_power_w", "quadrature", "variance_db_rel_shot"};
  for (const auto& p : data.squeezed) t.rows.push_back({p.pump_power, std::string("squeezed"), ratio_to_db(p.variance)});
  for (const auto& p : data.antisqueezed)
    t.rows.push_back({p.pump_power, std::string("antisqueezed"), ratio_to_db(p.variance)});
  return t;
}

SeriesPtr read_series(const CsvDocument& doc) {
  require_columns(doc, {"value"});
  const double fs = doc.meta_number("sample_rate_hz");
  std::vector<double> samples;
  samples.reserve(doc.rows.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) samples.push_back(doc.number(r, 0));
  sqz_series* raw = nullptr;
  if (sqz_series_create(fs, samples.data(), samples.size(), &raw) != SQZ_OK)
    throw DataError(doc.source + ": " + sqz_last_error());
  return SeriesPtr(raw);
}

Table series_table(const sqz_series* series) {
  Table t;
  t.metadata.emplace_back("sample_rate_hz", format_number(sqz_series_sample_rate(series)));
  t.columns = {"value"};
  const double* data = sqz_series_data(series);
  for (std::size_t i = 0; i < sqz_series_size(series); ++i) t.rows.push_back({data[i]});
  return t;
}

}  // namespace sqz::cli
