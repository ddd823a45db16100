#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sqz/least_squares.hpp"
#include "sqz/opo_model.hpp"
#include "sqz/physics.hpp"

namespace sqz {

struct GainMeasurement {
  double pump_power = 0.0;  // W
  double gain = 1.0;
  double power_fractional_uncertainty = 0.05;
};

struct ExclusionBand {
  double low = 0.0;   // Hz
  double high = 0.0;  // Hz

  bool contains(double f) const { return f >= low && f <= high; }
};

/// +-2 MHz around the 40 MHz pilot tone and the 80/100 MHz pick-up lines.
std::vector<ExclusionBand> default_exclusion_bands(double half_width = 2e6);

/// Threshold either held fixed at `value` or fitted with `value` as the
/// starting point (0 selects 1.2 x the largest pump power).
struct ThresholdSpec {
  bool free = false;
  double value = 0.0;  // W

  static ThresholdSpec fixed(double watts) { return {false, watts}; }
  static ThresholdSpec fitted(double initial_watts = 0.0) { return {true, initial_watts}; }
};

inline constexpr const char* kThresholdName = "threshold_power";
inline constexpr const char* kEfficiencyName = "total_efficiency";
inline constexpr const char* kPhaseNoiseName = "phase_noise_rms";
inline constexpr const char* kBandwidthName = "fwhm_bandwidth";

/// Fits the parametric-gain curve for the threshold power. The curve is
/// inverted for the pump power each gain implies, and residuals against the
/// recorded powers are scaled by the fractional power uncertainty, which
/// keeps the fit unbiased under power jitter. Points at zero pump power
/// carry no information and are skipped. initial_threshold <= 0 selects
/// 1.2 x the largest pump power.
FitResult fit_gain(std::span<const GainMeasurement> data, double initial_threshold = 0.0);

/// Removes an electronic noise floor from a variance measured relative to a
/// shot-noise reference that itself contains the floor.
double correct_electronic_noise(double measured_variance, double electronic_noise);

/// Inverse of correct_electronic_noise.
double add_electronic_noise(double true_variance, double electronic_noise);

struct SweepPoint {
  double pump_power = 0.0;  // W
  double variance = 1.0;    // linear, relative to shot noise
};

struct PowerSweepOptions {
  double sideband_frequency = 5e6;  // Hz
  double bandwidth = 66e6;          // Hz, cavity FWHM
  ThresholdSpec threshold = ThresholdSpec::fixed(5.12e-3);
};

/// Joint fit of squeezed and antisqueezed variance against pump power at one
/// sideband frequency. Residuals are model_dB - data_dB. Parameters are the
/// total efficiency, the RMS phase noise (bounded to [0, 0.1] rad) and,
/// when requested, the threshold power.
FitResult fit_power_sweep(std::span<const SweepPoint> squeezed, std::span<const SweepPoint> antisqueezed,
                          const PowerSweepOptions& options);

struct SpectraFitOptions {
  ThresholdSpec threshold = ThresholdSpec::fixed(5.12e-3);
  bool per_trace_phase_noise = false;
  std::optional<double> initial_bandwidth;   // Hz
  std::optional<CavityGeometry> geometry;    // seeds the bandwidth when set
};

/// Joint multi-trace fit across frequency and pump power. Points inside any
/// exclusion band are masked before residuals are formed. With per-trace
/// phase noise the parameters are named phase_noise_rms[k].
FitResult fit_spectra(std::span<const SpectrumTrace> traces, std::span<const ExclusionBand> exclusion_bands,
                      const SpectraFitOptions& options);

}  // namespace sqz
