#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sqz/estimation.hpp"
#include "sqz/noise_analysis.hpp"
#include "sqz/opo_model.hpp"

namespace sqz {

struct Seed {
  std::uint64_t value = 0;
};

struct Spur {
  double frequency = 0.0;        // Hz
  double height_db = 0.0;        // dB above the trace at the spur centre
  double width = 1e6;            // Hz, Gaussian standard deviation
};

struct SpectrumAnalyzerConfig {
  double rbw = 300e3;  // Hz
  double vbw = 300.0;  // Hz
  /// Trace averages; +infinity disables estimation noise.
  double trace_averages = 100.0;
  double electronic_noise = 0.0;  // linear, relative to shot noise
  std::vector<Spur> spurs;

  void validate() const;

  /// Relative standard deviation of each displayed point:
  /// 1/sqrt(averages * K), K = clamp(rbw / (2 vbw), 1, 250).
  double relative_point_noise() const;

  /// Noiseless analyzer without floor or spurs.
  static SpectrumAnalyzerConfig ideal();
};

/// Pilot tone at 40 MHz and pick-up at 80/100 MHz.
std::vector<Spur> default_spurs(double height_db = 15.0, double width = 1e6);

/// Gain curve sampled at jittered powers P (1 + f z); the nominal power is
/// recorded, reproducing an error on the x axis. Draws that land at or above
/// threshold (or below zero) are redrawn.
std::vector<GainMeasurement> gen_gain_data(double threshold, std::span<const double> powers,
                                           double power_fractional_error, Seed seed);

/// Spectrum-analyzer trace: model variance, electronic floor folded into the
/// shot-noise reference, multiplicative estimation noise, then spurs in dB.
SpectrumTrace gen_spectrum_trace(const OpoModelParams& params, double pump_power, std::span<const double> grid,
                                 Quadrature quadrature, const SpectrumAnalyzerConfig& sa, Seed seed);

/// Power-meter readings 1 + white + random walk.
TimeSeries gen_polarization_noise(double duration, double sample_rate, double white_std, double random_walk_step,
                                  Seed seed);

}  // namespace sqz
