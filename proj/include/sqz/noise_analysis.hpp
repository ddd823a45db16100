#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqz {

struct TimeSeries {
  double sample_rate = 1.0;  // Hz
  std::vector<double> samples;

  void validate() const;
};

struct AllanPoint {
  double tau = 0.0;  // s
  double oadev = 0.0;
  std::size_t num_terms = 0;
};

struct AllanResult {
  std::vector<AllanPoint> points;
  std::vector<std::string> warnings;  // one per omitted averaging factor
};

struct PsdPoint {
  double frequency = 0.0;  // Hz
  double density = 0.0;    // units^2 / Hz, one-sided
};

enum class Window { Hann, Rectangular };
enum class Detrend { None, Constant };

std::string_view to_string(Window w);
Window window_from_string(std::string_view text);

struct WelchOptions {
  std::size_t segment_length = 0;  // 0 selects N/8 rounded down to a power of two
  double overlap_fraction = 0.5;
  Window window = Window::Hann;
  Detrend detrend = Detrend::Constant;
};

/// y_i = x_i / mean(x) - 1.
TimeSeries normalize_fractional(const TimeSeries& series);

/// Averaging factors m in a 1-2-5 progression up to N/3.
std::vector<std::size_t> default_averaging_factors(std::size_t num_samples);

/// Overlapped Allan deviation of fractional (frequency-like) data at
/// tau = m / sample_rate. Factors with N < 2m + 1 are skipped with a warning.
AllanResult oadev(const TimeSeries& series, std::span<const std::size_t> averaging_factors);

std::size_t default_segment_length(std::size_t num_samples);

/// One-sided Welch periodogram, normalized so white noise of variance s^2
/// gives a flat 2 s^2 / fs away from DC and Nyquist.
std::vector<PsdPoint> welch_psd(const TimeSeries& series, const WelchOptions& options = {});

}  // namespace sqz
