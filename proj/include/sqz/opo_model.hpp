#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sqz {

/// Parameters of the below-threshold OPO squeezing model. The bandwidth is
/// the cavity FWHM in ordinary frequency; only the ratio sideband/FWHM
/// enters the model so no 2*pi factors are carried around.
struct OpoModelParams {
  double threshold_power = 0.0;  // W
  double fwhm_bandwidth = 0.0;   // Hz
  double total_efficiency = 1.0;
  double phase_noise_rms = 0.0;  // rad

  void validate() const;
};

enum class Quadrature { Squeezed, Antisqueezed };

std::string_view to_string(Quadrature q);
Quadrature quadrature_from_string(std::string_view text);

struct SpectrumPoint {
  double frequency = 0.0;  // Hz
  double variance = 0.0;   // linear, relative to shot noise
};

struct SpectrumTrace {
  double pump_power = 0.0;  // W
  Quadrature quadrature = Quadrature::Squeezed;
  std::vector<SpectrumPoint> points;
  std::optional<double> rbw;  // Hz
  std::optional<double> vbw;  // Hz
  std::optional<double> averages;

  /// Frequencies strictly increasing, variances positive and finite.
  void validate() const;
};

/// Phase-noise angle above which the small-angle model is flagged.
inline constexpr double kPhaseNoiseValidityLimit = 0.1;

/// True when phi exceeds the small-angle validity limit.
bool phase_noise_warning(const OpoModelParams& params);

/// Classical parametric gain 1/(1-sqrt(P/P_thr))^2. Rejects P >= P_thr.
double parametric_gain(double pump_power, double threshold_power);

/// Quadrature variance normalized to shot noise, including detection
/// efficiency and RMS phase jitter mixing the two quadratures.
double quadrature_variance(const OpoModelParams& params, double pump_power, double sideband_frequency,
                           Quadrature quadrature);

/// Same model written in the normalized pump amplitude x = sqrt(P/P_thr) and
/// the normalized sideband frequency f/FWHM. Used by the fitters, which keep
/// x strictly below 1 through bounds.
double quadrature_variance_normalized(double efficiency, double phase_noise, double pump_amplitude,
                                      double normalized_frequency, Quadrature quadrature);

SpectrumTrace spectrum(const OpoModelParams& params, double pump_power, std::span<const double> frequency_grid,
                       Quadrature quadrature);

struct SqueezingOptimum {
  double pump_power = 0.0;  // W
  double variance_db = 0.0;
};

/// Golden-section minimization of the squeezed variance over pump power
/// within [1e-6, 1 - 1e-6] * P_thr.
SqueezingOptimum max_detected_squeezing(const OpoModelParams& params, double sideband_frequency);

}  // namespace sqz
