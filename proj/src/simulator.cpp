#include "sqz/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "sqz/errors.hpp"
#include "sqz/physics.hpp"
#include "sqz/random.hpp"

namespace sqz {

void SpectrumAnalyzerConfig::validate() const {
  if (!(rbw > 0.0)) throw InvalidArgument("resolution bandwidth must be positive");
  if (!(vbw > 0.0)) throw InvalidArgument("video bandwidth must be positive");
  if (!(trace_averages >= 1.0)) throw InvalidArgument("trace averages must be at least 1");
  if (!(electronic_noise >= 0.0 && electronic_noise < 1.0))
    throw InvalidArgument("electronic noise must lie in [0, 1)");
  for (const auto& s : spurs)
    if (!(s.width > 0.0) || !std::isfinite(s.frequency) || !std::isfinite(s.height_db))
      throw InvalidArgument("spur needs a finite frequency and height and a positive width");
}

double SpectrumAnalyzerConfig::relative_point_noise() const {
  if (std::isinf(trace_averages)) return 0.0;
  const double k = std::clamp(rbw / (2.0 * vbw), 1.0, 250.0);
  return 1.0 / std::sqrt(trace_averages * k);
}

SpectrumAnalyzerConfig SpectrumAnalyzerConfig::ideal() {
  SpectrumAnalyzerConfig sa;
  sa.trace_averages = std::numeric_limits<double>::infinity();
  return sa;
}

std::vector<Spur> default_spurs(double height_db, double width) {
  return {{40e6, height_db, width}, {80e6, height_db, width}, {100e6, height_db, width}};
}

std::vector<GainMeasurement> gen_gain_data(double threshold, std::span<const double> powers,
                                           double power_fractional_error, Seed seed) {
  if (!(threshold > 0.0)) throw InvalidArgument("threshold must be positive");
  if (!(power_fractional_error >= 0.0)) throw InvalidArgument("power error must be non-negative");
  for (double p : powers)
    if (!(p >= 0.0 && p < threshold)) throw DomainError("gain simulation needs 0 <= power < threshold");

  NormalSource normal(seed.value);
  std::vector<GainMeasurement> out;
  out.reserve(powers.size());
  for (double p : powers) {
    double actual = p;
    if (power_fractional_error > 0.0) {
      do {
        actual = p * (1.0 + power_fractional_error * normal());
      } while (!(actual >= 0.0 && actual < threshold));
    }
    out.push_back({p, parametric_gain(actual, threshold), power_fractional_error});
  }
  return out;
}

SpectrumTrace gen_spectrum_trace(const OpoModelParams& params, double pump_power, std::span<const double> grid,
                                 Quadrature quadrature, const SpectrumAnalyzerConfig& sa, Seed seed) {
  sa.validate();
  SpectrumTrace trace = spectrum(params, pump_power, grid, quadrature);
  trace.rbw = sa.rbw;
  trace.vbw = sa.vbw;
  trace.averages = sa.trace_averages;

  const double sigma = sa.relative_point_noise();
  NormalSource normal(seed.value);
  for (auto& pt : trace.points) {
    double v = add_electronic_noise(pt.variance, sa.electronic_noise);
    if (sigma > 0.0) {
      // Keep the multiplicative factor positive even for extreme draws.
      v *= std::max(1.0 + sigma * normal(), 1e-3);
    }
    double spur_db = 0.0;
    for (const auto& s : sa.spurs) {
      const double d = (pt.frequency - s.frequency) / s.width;
      spur_db += s.height_db * std::exp(-0.5 * d * d);
    }
    if (spur_db != 0.0) v *= ratio_from_db(spur_db);
    pt.variance = v;
  }
  return trace;
}

TimeSeries gen_polarization_noise(double duration, double sample_rate, double white_std, double random_walk_step,
                                  Seed seed) {
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (!(white_std >= 0.0) || !(random_walk_step >= 0.0)) throw InvalidArgument("noise levels must be non-negative");
  const double count = std::round(duration * sample_rate);
  if (!(count >= 10.0)) throw InvalidArgument("need at least 10 samples (duration * sample rate)");

  NormalSource normal(seed.value);
  TimeSeries out{sample_rate, {}};
  const auto n = static_cast<std::size_t>(count);
  out.samples.reserve(n);
  double walk = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double white = white_std * normal();
    walk += random_walk_step * normal();
    out.samples.push_back(1.0 + white + walk);
  }
  return out;
}

}  // namespace sqz
