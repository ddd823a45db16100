#pragma once

#include <memory>
#include <string>

#include "csv.hpp"
#include "sqz/sqz.h"

namespace sqz::cli {

inline void check(sqz_status status) {
  if (status != SQZ_OK) throw DataError(std::string(sqz_status_string(status)) + ": " + sqz_last_error());
}

struct TraceDeleter {
  void operator()(sqz_trace* t) const { sqz_trace_free(t); }
};
struct SeriesDeleter {
  void operator()(sqz_series* s) const { sqz_series_free(s); }
};
struct FitDeleter {
  void operator()(sqz_fit_result* f) const { sqz_fit_result_free(f); }
};

using TracePtr = std::unique_ptr<sqz_trace, TraceDeleter>;
using SeriesPtr = std::unique_ptr<sqz_series, SeriesDeleter>;
using FitPtr = std::unique_ptr<sqz_fit_result, FitDeleter>;

}  // namespace sqz::cli
