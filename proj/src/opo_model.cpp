#include "sqz/opo_model.hpp"

#include <cmath>
#include <string>

#include "sqz/errors.hpp"
#include "sqz/physics.hpp"

namespace sqz {

void OpoModelParams::validate() const {
  if (!(std::isfinite(threshold_power) && threshold_power > 0.0))
    throw InvalidArgument("threshold power must be positive");
  if (!(std::isfinite(fwhm_bandwidth) && fwhm_bandwidth > 0.0))
    throw InvalidArgument("cavity bandwidth must be positive");
  if (!(total_efficiency > 0.0 && total_efficiency <= 1.0))
    throw InvalidArgument("total efficiency must lie in (0, 1]");
  if (!(phase_noise_rms >= 0.0 && phase_noise_rms < kPi / 2.0))
    throw InvalidArgument("phase noise must lie in [0, pi/2)");
}

std::string_view to_string(Quadrature q) { return q == Quadrature::Squeezed ? "squeezed" : "antisqueezed"; }

Quadrature quadrature_from_string(std::string_view text) {
  if (text == "squeezed" || text == "minus" || text == "-") return Quadrature::Squeezed;
  if (text == "antisqueezed" || text == "anti-squeezed" || text == "plus" || text == "+")
    return Quadrature::Antisqueezed;
  throw InvalidArgument("unknown quadrature '" + std::string(text) + "'");
}

void SpectrumTrace::validate() const {
  if (points.empty()) throw InvalidArgument("spectrum trace has no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.frequency) || !std::isfinite(p.variance))
      throw InvalidArgument("spectrum trace contains a non-finite value");
    if (!(p.variance > 0.0)) throw InvalidArgument("spectrum variances must be positive");
    if (i > 0 && !(p.frequency > points[i - 1].frequency))
      throw InvalidArgument("spectrum frequencies must be strictly increasing");
  }
  if (!(pump_power >= 0.0)) throw InvalidArgument("pump power must be non-negative");
}

bool phase_noise_warning(const OpoModelParams& params) {
  return params.phase_noise_rms > kPhaseNoiseValidityLimit;
}

namespace {

void check_pump(double pump_power, double threshold_power) {
  if (!(threshold_power > 0.0)) throw DomainError("threshold power must be positive");
  if (!(pump_power >= 0.0)) throw DomainError("pump power must be non-negative");
  if (!(pump_power < threshold_power))
    throw DomainError("pump power at or above threshold; the below-threshold model diverges");
}

}  // namespace

double parametric_gain(double pump_power, double threshold_power) {
  check_pump(pump_power, threshold_power);
  const double root = 1.0 - std::sqrt(pump_power / threshold_power);
  return 1.0 / (root * root);
}

double quadrature_variance_normalized(double efficiency, double phase_noise, double pump_amplitude,
                                      double normalized_frequency, Quadrature quadrature) {
  const double x = pump_amplitude;
  const double w2 = 4.0 * normalized_frequency * normalized_frequency;
  const double c2 = std::cos(phase_noise) * std::cos(phase_noise);
  const double s2 = std::sin(phase_noise) * std::sin(phase_noise);
  // Lorentzians of the deamplified (1+x) and amplified (1-x) quadratures.
  const double deamplified = 4.0 * x / ((1.0 + x) * (1.0 + x) + w2);
  const double amplified = 4.0 * x / ((1.0 - x) * (1.0 - x) + w2);
  if (quadrature == Quadrature::Squeezed) return 1.0 + efficiency * (-c2 * deamplified + s2 * amplified);
  return 1.0 + efficiency * (c2 * amplified - s2 * deamplified);
}

double quadrature_variance(const OpoModelParams& params, double pump_power, double sideband_frequency,
                           Quadrature quadrature) {
  params.validate();
  check_pump(pump_power, params.threshold_power);
  if (!(sideband_frequency >= 0.0)) throw DomainError("sideband frequency must be non-negative");
  const double x = std::sqrt(pump_power / params.threshold_power);
  return quadrature_variance_normalized(params.total_efficiency, params.phase_noise_rms, x,
                                        sideband_frequency / params.fwhm_bandwidth, quadrature);
}

SpectrumTrace spectrum(const OpoModelParams& params, double pump_power, std::span<const double> frequency_grid,
                       Quadrature quadrature) {
  if (frequency_grid.empty()) throw InvalidArgument("frequency grid is empty");
  SpectrumTrace trace;
  trace.pump_power = pump_power;
  trace.quadrature = quadrature;
  trace.points.reserve(frequency_grid.size());
  for (std::size_t i = 0; i < frequency_grid.size(); ++i) {
    const double f = frequency_grid[i];
    if (!(f > 0.0)) throw InvalidArgument("frequency grid must be positive");
    if (i > 0 && !(f > frequency_grid[i - 1])) throw InvalidArgument("frequency grid must be sorted");
    trace.points.push_back({f, quadrature_variance(params, pump_power, f, quadrature)});
  }
  return trace;
}

SqueezingOptimum max_detected_squeezing(const OpoModelParams& params, double sideband_frequency) {
  params.validate();
  const double p_thr = params.threshold_power;
  auto cost = [&](double p) { return quadrature_variance(params, p, sideband_frequency, Quadrature::Squeezed); };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 1e-6 * p_thr;
  double hi = (1.0 - 1e-6) * p_thr;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = cost(a);
  double fb = cost(b);
  while ((hi - lo) > 1e-6 * 0.5 * (std::abs(lo) + std::abs(hi))) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = cost(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = cost(b);
    }
  }

  // A monotone cost (phi = 0) drives the bracket to the guard; compare the
  // bracket against both guard points explicitly.
  SqueezingOptimum best{0.5 * (lo + hi), 0.0};
  double best_v = cost(best.pump_power);
  for (double edge : {1e-6 * p_thr, (1.0 - 1e-6) * p_thr}) {
    const double v = cost(edge);
    if (v < best_v) {
      best_v = v;
      best.pump_power = edge;
    }
  }
  best.variance_db = db_from_ratio(best_v);
  return best;
}

}  // namespace sqz
