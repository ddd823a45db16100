#pragma once

#include <string>
#include <vector>

#include "api.hpp"
#include "csv.hpp"

namespace sqz::cli {

sqz_quadrature parse_quadrature(const std::string& text);
const char* quadrature_name(sqz_quadrature q);

// Gain data: pump_power_w,gain,power_frac_err
std::vector<sqz_gain_point> read_gain(const CsvDocument& doc);
Table gain_table(const std::vector<sqz_gain_point>& points);

// Spectrum trace: frequency_hz,variance_db_rel_shot plus
// `# pump_power_w=`, `# quadrature=` and optional `# rbw_hz=`, `# vbw_hz=`,
// `# averages=` header lines.
TracePtr read_trace(const CsvDocument& doc);
Table trace_table(const sqz_trace* trace, std::vector<std::pair<std::string, std::string>> extra_metadata = {});

// Power sweep: pump_power_w,quadrature,variance_db_rel_shot
struct SweepData {
  std::vector<sqz_sweep_point> squeezed;
  std::vector<sqz_sweep_point> antisqueezed;
};
SweepData read_sweep(const CsvDocument& doc);
Table sweep_table(const SweepData& data);

// Time series: `# sample_rate_hz=` then a single `value` column.
SeriesPtr read_series(const CsvDocument& doc);
Table series_table(const sqz_series* series);

}  // namespace sqz::cli
