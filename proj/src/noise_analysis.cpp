#include "sqz/noise_analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>

#include "sqz/errors.hpp"
#include "sqz/physics.hpp"

namespace sqz {

void TimeSeries::validate() const {
  if (!(std::isfinite(sample_rate) && sample_rate > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (samples.size() < 2) throw InvalidArgument("time series needs at least two samples");
  for (double v : samples)
    if (!std::isfinite(v)) throw InvalidArgument("time series contains a non-finite sample");
}

std::string_view to_string(Window w) { return w == Window::Hann ? "hann" : "rectangular"; }

Window window_from_string(std::string_view text) {
  if (text == "hann" || text == "hanning") return Window::Hann;
  if (text == "rectangular" || text == "boxcar" || text == "rect") return Window::Rectangular;
  throw InvalidArgument("unknown window '" + std::string(text) + "'");
}

TimeSeries normalize_fractional(const TimeSeries& series) {
  series.validate();
  const double mean = std::accumulate(series.samples.begin(), series.samples.end(), 0.0) /
                      static_cast<double>(series.samples.size());
  if (mean == 0.0) throw DomainError("cannot normalize a series with zero mean");
  TimeSeries out{series.sample_rate, {}};
  out.samples.reserve(series.samples.size());
  for (double v : series.samples) out.samples.push_back(v / mean - 1.0);
  // Remove the rounding residue so the output mean is zero to machine precision.
  const double residue = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) /
                         static_cast<double>(out.samples.size());
  for (double& v : out.samples) v -= residue;
  return out;
}

std::vector<std::size_t> default_averaging_factors(std::size_t num_samples) {
  std::vector<std::size_t> out;
  const std::size_t limit = num_samples / 3;
  for (std::size_t decade = 1; decade <= limit; decade *= 10) {
    for (std::size_t mult : {1, 2, 5}) {
      const std::size_t m = mult * decade;
      if (m >= 1 && m <= limit) out.push_back(m);
    }
    if (decade > limit / 10) break;
  }
  return out;
}

AllanResult oadev(const TimeSeries& series, std::span<const std::size_t> averaging_factors) {
  series.validate();
  const auto& y = series.samples;
  const std::size_t n = y.size();

  // Cumulative sums turn each inner window sum into an O(1) second difference.
  std::vector<long double> cum(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + static_cast<long double>(y[i]);

  AllanResult out;
  for (std::size_t m : averaging_factors) {
    if (m == 0) throw InvalidArgument("averaging factor must be at least 1");
    if (n < 2 * m + 1) {
      out.warnings.push_back("averaging factor " + std::to_string(m) + " omitted: needs at least " +
                             std::to_string(2 * m + 1) + " samples, have " + std::to_string(n));
      continue;
    }
    const std::size_t terms = n - 2 * m + 1;
    long double acc = 0.0L;
    for (std::size_t j = 0; j < terms; ++j) {
      const long double s = (cum[j + 2 * m] - cum[j + m]) - (cum[j + m] - cum[j]);
      acc += s * s;
    }
    const long double md = static_cast<long double>(m);
    const long double var = acc / (2.0L * md * md * static_cast<long double>(terms));
    out.points.push_back({static_cast<double>(m) / series.sample_rate, static_cast<double>(std::sqrt(var)), terms});
  }
  return out;
}

std::size_t default_segment_length(std::size_t num_samples) {
  const std::size_t target = std::max<std::size_t>(num_samples / 8, 2);
  std::size_t p = 1;
  while (p * 2 <= target) p *= 2;
  return std::min(p, num_samples);
}

namespace {

// FFTW planning is not thread-safe; executing a plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace

std::vector<PsdPoint> welch_psd(const TimeSeries& series, const WelchOptions& options) {
  series.validate();
  const std::size_t n = series.samples.size();
  const std::size_t seg = options.segment_length == 0 ? default_segment_length(n) : options.segment_length;
  if (seg < 2) throw InvalidArgument("segment length must be at least 2");
  if (seg > n) throw InvalidArgument("segment length exceeds the series length");
  if (!(options.overlap_fraction >= 0.0 && options.overlap_fraction <= 0.9))
    throw InvalidArgument("overlap fraction must lie in [0, 0.9]");

  std::vector<double> window(seg, 1.0);
  if (options.window == Window::Hann) {
    // Periodic Hann, the usual choice for spectral estimation.
    for (std::size_t i = 0; i < seg; ++i)
      window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(seg));
  }
  double window_power = 0.0;
  for (double w : window) window_power += w * w;

  const std::size_t overlap = static_cast<std::size_t>(std::floor(static_cast<double>(seg) * options.overlap_fraction));
  const std::size_t hop = std::max<std::size_t>(seg - overlap, 1);
  const std::size_t bins = seg / 2 + 1;

  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * seg)));
  std::unique_ptr<fftw_complex, FftwFree> spec(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(seg), in.get(), spec.get(), FFTW_ESTIMATE));
  }
  if (!plan) throw NumericalError("FFT planning failed");

  std::vector<double> acc(bins, 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg <= n; start += hop) {
    const double* x = series.samples.data() + start;
    double mean = 0.0;
    if (options.detrend == Detrend::Constant) {
      for (std::size_t i = 0; i < seg; ++i) mean += x[i];
      mean /= static_cast<double>(seg);
    }
    for (std::size_t i = 0; i < seg; ++i) in.get()[i] = (x[i] - mean) * window[i];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = spec.get()[k][0];
      const double im = spec.get()[k][1];
      double p = re * re + im * im;
      const bool nyquist = (seg % 2 == 0) && k == seg / 2;
      if (k != 0 && !nyquist) p *= 2.0;
      acc[k] += p;
    }
    ++segments;
  }

  const double scale = 1.0 / (series.sample_rate * window_power * static_cast<double>(segments));
  std::vector<PsdPoint> out(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out[k].frequency = static_cast<double>(k) * series.sample_rate / static_cast<double>(seg);
    out[k].density = acc[k] * scale;
  }
  return out;
}

}  // namespace sqz
