#include "sqz/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

constexpr double kThresholdMargin = 1.0001;  // lower bound on P_thr / max(P)
constexpr double kMaxPhaseNoise = 0.1;
constexpr double kInitialPhaseNoise = 0.010;

double db(double ratio) { return 10.0 * std::log10(ratio); }

// Converts a fit done in normalized coordinates back to physical units:
// value_i -> scale_i * value_i, covariance scaled accordingly.
void rescale(FitResult& fit, std::span<const double> scale) {
  const std::size_t n = fit.size();
  for (std::size_t i = 0; i < n; ++i) {
    fit.values[i] *= scale[i];
    fit.standard_errors[i] *= std::abs(scale[i]);
    for (std::size_t j = 0; j < n; ++j) fit.covariance[i * n + j] *= scale[i] * scale[j];
  }
}

double initial_efficiency(double min_squeezed_variance) {
  return std::clamp(1.0 - min_squeezed_variance, 0.05, 1.0);
}

}  // namespace

std::vector<ExclusionBand> default_exclusion_bands(double half_width) {
  if (!(half_width > 0.0)) throw InvalidArgument("exclusion half-width must be positive");
  std::vector<ExclusionBand> bands;
  for (double centre : {40e6, 80e6, 100e6}) bands.push_back({centre - half_width, centre + half_width});
  return bands;
}

FitResult fit_gain(std::span<const GainMeasurement> data, double initial_threshold) {
  std::vector<GainMeasurement> pts;
  for (const auto& m : data) {
    if (!(std::isfinite(m.pump_power) && m.pump_power >= 0.0))
      throw InvalidArgument("gain data: pump power must be non-negative");
    if (!std::isfinite(m.gain) || !(m.gain > 0.0)) throw InvalidArgument("gain data: gain must be positive");
    if (!(m.power_fractional_uncertainty >= 0.0))
      throw InvalidArgument("gain data: power uncertainty must be non-negative");
    if (m.pump_power > 0.0) pts.push_back(m);
  }
  if (pts.empty()) throw InvalidArgument("gain data: all points at zero pump power; threshold is unidentifiable");
  if (pts.size() < 2) throw InvalidArgument("gain data: need at least two points with positive pump power");

  const bool any_weight = std::any_of(pts.begin(), pts.end(), [](auto& m) { return m.power_fractional_uncertainty > 0.0; });
  const bool all_weight = std::all_of(pts.begin(), pts.end(), [](auto& m) { return m.power_fractional_uncertainty > 0.0; });
  if (any_weight && !all_weight)
    throw InvalidArgument("gain data: power uncertainties must be all positive or all zero");

  double p_max = 0.0;
  for (const auto& m : pts) p_max = std::max(p_max, m.pump_power);

  // Each gain implies a pump power P_thr (1 - g^-1/2)^2; the residual compares
  // it with the recorded power in units of that power's uncertainty. The
  // signed square keeps g < 1 scatter on a monotone branch.
  std::vector<double> implied(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double a = 1.0 - 1.0 / std::sqrt(pts[i].gain);
    implied[i] = a * std::abs(a);
  }
  auto residuals = [&pts, &implied, p_max, all_weight](std::span<const double> theta, std::vector<double>& r) {
    r.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double p = pts[i].pump_power / p_max;
      const double sigma = all_weight ? pts[i].power_fractional_uncertainty * p : 1.0;
      r[i] = (theta[0] * implied[i] - p) / sigma;
    }
  };

  double init = initial_threshold > 0.0 ? initial_threshold / p_max : 1.2;
  init = std::max(init, kThresholdMargin);
  const std::vector<Bounds> bounds{{kThresholdMargin, std::numeric_limits<double>::infinity()}};
  FitResult fit = least_squares(residuals, {init}, bounds, {kThresholdName});
  const double scale[] = {p_max};
  rescale(fit, scale);
  if (!all_weight) fit.warnings.push_back("no power uncertainties given; residuals are unweighted");
  return fit;
}

double correct_electronic_noise(double measured_variance, double electronic_noise) {
  if (!(electronic_noise >= 0.0 && electronic_noise < 1.0))
    throw DomainError("electronic noise must lie in [0, 1) relative to shot noise");
  if (!(measured_variance > electronic_noise))
    throw DomainError("measured variance is at or below the electronic noise floor");
  return (measured_variance - electronic_noise) / (1.0 - electronic_noise);
}

double add_electronic_noise(double true_variance, double electronic_noise) {
  if (!(electronic_noise >= 0.0 && electronic_noise < 1.0))
    throw DomainError("electronic noise must lie in [0, 1) relative to shot noise");
  return true_variance * (1.0 - electronic_noise) + electronic_noise;
}

FitResult fit_power_sweep(std::span<const SweepPoint> squeezed, std::span<const SweepPoint> antisqueezed,
                          const PowerSweepOptions& options) {
  if (squeezed.empty() && antisqueezed.empty()) throw InvalidArgument("power sweep: no data");
  if (!(options.bandwidth > 0.0)) throw InvalidArgument("power sweep: bandwidth must be positive");
  if (!(options.sideband_frequency >= 0.0)) throw InvalidArgument("power sweep: sideband frequency must be >= 0");

  struct Row {
    double power;
    double data_db;
    Quadrature q;
  };
  std::vector<Row> rows;
  double p_max = 0.0;
  double min_sq = 1.0;
  auto add = [&](std::span<const SweepPoint> pts, Quadrature q) {
    for (const auto& s : pts) {
      if (!(std::isfinite(s.pump_power) && s.pump_power >= 0.0))
        throw InvalidArgument("power sweep: pump power must be non-negative");
      if (!(std::isfinite(s.variance) && s.variance > 0.0))
        throw InvalidArgument("power sweep: variances must be positive");
      rows.push_back({s.pump_power, db(s.variance), q});
      p_max = std::max(p_max, s.pump_power);
      if (q == Quadrature::Squeezed) min_sq = std::min(min_sq, s.variance);
    }
  };
  add(squeezed, Quadrature::Squeezed);
  add(antisqueezed, Quadrature::Antisqueezed);
  if (!(p_max > 0.0)) throw InvalidArgument("power sweep: all points at zero pump power");

  const bool free_thr = options.threshold.free;
  if (!free_thr && !(options.threshold.value > p_max))
    throw InvalidArgument("power sweep: fixed threshold must exceed every pump power");

  const double omega = options.sideband_frequency / options.bandwidth;
  const double fixed_ratio = free_thr ? 0.0 : options.threshold.value / p_max;

  // theta = [eta, phi, (P_thr / max P)]
  auto residuals = [&rows, omega, p_max, free_thr, fixed_ratio](std::span<const double> theta,
                                                                 std::vector<double>& r) {
    const double ratio = free_thr ? theta[2] : fixed_ratio;
    const double p_thr = ratio * p_max;
    r.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double x = std::sqrt(rows[i].power / p_thr);
      const double v = quadrature_variance_normalized(theta[0], theta[1], x, omega, rows[i].q);
      r[i] = db(v) - rows[i].data_db;
    }
  };

  std::vector<double> init{initial_efficiency(squeezed.empty() ? 0.1 : min_sq), kInitialPhaseNoise};
  std::vector<Bounds> bounds{{1e-6, 1.0}, {0.0, kMaxPhaseNoise}};
  std::vector<std::string> names{kEfficiencyName, kPhaseNoiseName};
  std::vector<double> scale{1.0, 1.0};
  if (free_thr) {
    const double guess = options.threshold.value > 0.0 ? options.threshold.value / p_max : 1.2;
    init.push_back(std::clamp(guess, kThresholdMargin, 1e3));
    bounds.push_back({kThresholdMargin, 1e3});
    names.emplace_back(kThresholdName);
    scale.push_back(p_max);
  }

  FitResult fit = least_squares(residuals, std::move(init), bounds, std::move(names));
  rescale(fit, scale);
  if (squeezed.empty() || antisqueezed.empty())
    fit.warnings.push_back(
        "only one quadrature supplied; efficiency and phase noise are weakly identifiable, expect wide "
        "confidence intervals");
  return fit;
}

namespace {

// Rough FWHM from the frequency where the excess noise |V-1| of the
// strongest trace falls to half its low-frequency value.
double estimate_bandwidth(std::span<const SpectrumTrace> traces, std::span<const ExclusionBand> bands,
                          double p_thr) {
  const SpectrumTrace* best = nullptr;
  double best_excess = -1.0;
  for (const auto& t : traces) {
    const double excess = std::abs(t.points.front().variance - 1.0);
    if (excess > best_excess) {
      best_excess = excess;
      best = &t;
    }
  }
  double f_max = 0.0;
  for (const auto& t : traces) f_max = std::max(f_max, t.points.back().frequency);
  if (best == nullptr || !(best_excess > 0.0)) return 2.0 * f_max;

  const double x = std::sqrt(std::min(best->pump_power / p_thr, 0.99));
  const double width = best->quadrature == Quadrature::Squeezed ? 1.0 + x : 1.0 - x;
  for (const auto& pt : best->points) {
    const bool masked = std::any_of(bands.begin(), bands.end(), [&](auto& b) { return b.contains(pt.frequency); });
    if (masked) continue;
    if (std::abs(pt.variance - 1.0) <= 0.5 * best_excess) return 2.0 * pt.frequency / width;
  }
  return 2.0 * f_max;
}

}  // namespace

FitResult fit_spectra(std::span<const SpectrumTrace> traces, std::span<const ExclusionBand> exclusion_bands,
                      const SpectraFitOptions& options) {
  if (traces.empty()) throw InvalidArgument("spectrum fit: no traces");
  for (const auto& b : exclusion_bands)
    if (!(b.low < b.high)) throw InvalidArgument("exclusion band must satisfy low < high");

  double p_max = 0.0;
  for (const auto& t : traces) {
    t.validate();
    p_max = std::max(p_max, t.pump_power);
  }
  if (!(p_max > 0.0)) throw InvalidArgument("spectrum fit: all traces at zero pump power");
  const bool free_thr = options.threshold.free;
  if (!free_thr && !(options.threshold.value > p_max))
    throw InvalidArgument("spectrum fit: fixed threshold must exceed every trace's pump power");

  struct Row {
    std::size_t trace;
    double frequency;
    double data_db;
  };
  std::vector<Row> rows;
  double min_sq = 1.0;
  bool have_sq = false;
  double f_max = 0.0;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    for (const auto& pt : traces[k].points) {
      const bool masked =
          std::any_of(exclusion_bands.begin(), exclusion_bands.end(), [&](auto& b) { return b.contains(pt.frequency); });
      if (masked) continue;
      rows.push_back({k, pt.frequency, db(pt.variance)});
      f_max = std::max(f_max, pt.frequency);
      if (traces[k].quadrature == Quadrature::Squeezed) {
        have_sq = true;
        min_sq = std::min(min_sq, pt.variance);
      }
    }
  }
  if (rows.empty()) throw InvalidArgument("spectrum fit: every point falls inside an exclusion band");

  const double thr_guess_w = free_thr ? (options.threshold.value > 0.0 ? options.threshold.value : 1.2 * p_max)
                                      : options.threshold.value;
  double kappa0 = 0.0;
  if (options.initial_bandwidth) {
    kappa0 = *options.initial_bandwidth;
  } else if (options.geometry) {
    kappa0 = characterize(*options.geometry).fwhm;
  } else {
    kappa0 = estimate_bandwidth(traces, exclusion_bands, std::max(thr_guess_w, kThresholdMargin * p_max));
  }
  if (!(kappa0 > 0.0)) throw InvalidArgument("spectrum fit: initial bandwidth must be positive");

  const std::size_t n_phi = options.per_trace_phase_noise ? traces.size() : 1;
  const std::size_t i_thr = 2 + n_phi;
  const double fixed_ratio = free_thr ? 0.0 : options.threshold.value / p_max;

  // theta = [eta, kappa / kappa0, phi..., (P_thr / max P)]
  auto residuals = [&, kappa0, p_max, free_thr, fixed_ratio, n_phi, i_thr](std::span<const double> theta,
                                                                           std::vector<double>& r) {
    const double p_thr = (free_thr ? theta[i_thr] : fixed_ratio) * p_max;
    const double kappa = theta[1] * kappa0;
    r.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& tr = traces[rows[i].trace];
      const double phi = theta[2 + (n_phi == 1 ? 0 : rows[i].trace)];
      const double x = std::sqrt(tr.pump_power / p_thr);
      const double v = quadrature_variance_normalized(theta[0], phi, x, rows[i].frequency / kappa, tr.quadrature);
      r[i] = db(v) - rows[i].data_db;
    }
  };

  std::vector<double> init{initial_efficiency(have_sq ? min_sq : 0.1), 1.0};
  std::vector<Bounds> bounds{{1e-6, 1.0}, {1e-3, 1e3}};
  std::vector<std::string> names{kEfficiencyName, kBandwidthName};
  std::vector<double> scale{1.0, kappa0};
  for (std::size_t k = 0; k < n_phi; ++k) {
    init.push_back(kInitialPhaseNoise);
    bounds.push_back({0.0, kMaxPhaseNoise});
    names.push_back(n_phi == 1 ? std::string(kPhaseNoiseName) : std::string(kPhaseNoiseName) + "[" + std::to_string(k) + "]");
    scale.push_back(1.0);
  }
  if (free_thr) {
    init.push_back(std::clamp(thr_guess_w / p_max, kThresholdMargin, 1e3));
    bounds.push_back({kThresholdMargin, 1e3});
    names.emplace_back(kThresholdName);
    scale.push_back(p_max);
  }

  FitResult fit = least_squares(residuals, std::move(init), bounds, std::move(names));
  rescale(fit, scale);
  const double kappa = fit.values[1];
  if (f_max < 0.1 * kappa) {
    std::ostringstream w;
    w << "bandwidth weakly identifiable: highest fitted frequency " << f_max << " Hz is far below the FWHM "
      << kappa << " Hz";
    fit.warnings.push_back(w.str());
  }
  return fit;
}

}  // namespace sqz
