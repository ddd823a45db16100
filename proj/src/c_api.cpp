#include "sqz/sqz.h"

#include <cmath>
#include <exception>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "sqz/errors.hpp"
#include "sqz/estimation.hpp"
#include "sqz/noise_analysis.hpp"
#include "sqz/opo_model.hpp"
#include "sqz/physics.hpp"
#include "sqz/simulator.hpp"

struct sqz_trace {
  sqz::SpectrumTrace trace;
};

struct sqz_fit_result {
  sqz::FitResult fit;
};

struct sqz_series {
  sqz::TimeSeries series;
};

namespace {

thread_local std::string g_last_error;

sqz_status fail(sqz_status status, const char* what) {
  g_last_error = what;
  return status;
}

template <class F>
sqz_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return SQZ_OK;
  } catch (const sqz::DomainError& e) {
    return fail(SQZ_ERR_DOMAIN, e.what());
  } catch (const sqz::InvalidArgument& e) {
    return fail(SQZ_ERR_INVALID_ARGUMENT, e.what());
  } catch (const sqz::NumericalError& e) {
    return fail(SQZ_ERR_NUMERICAL, e.what());
  } catch (const std::out_of_range& e) {
    return fail(SQZ_ERR_OUT_OF_RANGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SQZ_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SQZ_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SQZ_ERR_INTERNAL, "unknown error");
  }
}

template <class T>
void require(const T* p, const char* name) {
  if (p == nullptr) throw sqz::InvalidArgument(std::string(name) + " must not be NULL");
}

const double kNaN = std::numeric_limits<double>::quiet_NaN();

sqz::CavityGeometry to_cpp(const sqz_cavity_geometry& g) {
  return {g.round_trip_length, g.output_coupler_reflectivity, g.back_mirror_reflectivity, g.per_pass_loss,
          g.band == SQZ_BAND_775 ? sqz::WavelengthBand::Pump775 : sqz::WavelengthBand::Fundamental1550};
}

sqz::OpoModelParams to_cpp(const sqz_opo_params& p) {
  return {p.threshold_power, p.fwhm_bandwidth, p.total_efficiency, p.phase_noise_rms};
}

sqz::Quadrature to_cpp(sqz_quadrature q) {
  if (q != SQZ_SQUEEZED && q != SQZ_ANTISQUEEZED) throw sqz::InvalidArgument("unknown quadrature value");
  return q == SQZ_SQUEEZED ? sqz::Quadrature::Squeezed : sqz::Quadrature::Antisqueezed;
}

sqz_quadrature to_c(sqz::Quadrature q) { return q == sqz::Quadrature::Squeezed ? SQZ_SQUEEZED : SQZ_ANTISQUEEZED; }

sqz::ThresholdSpec to_cpp(sqz_threshold_spec t) { return {t.free != 0, t.value}; }

sqz::WelchOptions to_cpp(const sqz_welch_options& o) {
  sqz::WelchOptions w;
  w.segment_length = o.segment_length;
  w.overlap_fraction = o.overlap_fraction;
  w.window = o.window == SQZ_WINDOW_RECTANGULAR ? sqz::Window::Rectangular : sqz::Window::Hann;
  w.detrend = o.detrend_constant ? sqz::Detrend::Constant : sqz::Detrend::None;
  return w;
}

std::vector<double> copy_array(const double* data, std::size_t count, const char* name) {
  if (count > 0) require(data, name);
  return std::vector<double>(data, data + count);
}

}  // namespace

extern "C" {

const char* sqz_last_error(void) { return g_last_error.c_str(); }

const char* sqz_version(void) { return "0.1.0"; }

const char* sqz_status_string(sqz_status status) {
  switch (status) {
    case SQZ_OK: return "ok";
    case SQZ_ERR_DOMAIN: return "domain error";
    case SQZ_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SQZ_ERR_NUMERICAL: return "numerical error";
    case SQZ_ERR_OUT_OF_RANGE: return "out of range";
    case SQZ_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

/* physics */

sqz_status sqz_db_from_ratio(double ratio, double* out_db) {
  return guarded([&] {
    require(out_db, "out_db");
    *out_db = sqz::db_from_ratio(ratio);
  });
}

sqz_status sqz_ratio_from_db(double db, double* out_ratio) {
  return guarded([&] {
    require(out_ratio, "out_ratio");
    *out_ratio = sqz::ratio_from_db(db);
  });
}

sqz_status sqz_free_spectral_range(double round_trip_length, double* out_hz) {
  return guarded([&] {
    require(out_hz, "out_hz");
    *out_hz = sqz::free_spectral_range(round_trip_length);
  });
}

sqz_status sqz_default_geometry(sqz_band band, sqz_cavity_geometry* out) {
  return guarded([&] {
    require(out, "out");
    const auto g = sqz::default_geometry(band == SQZ_BAND_775 ? sqz::WavelengthBand::Pump775
                                                                : sqz::WavelengthBand::Fundamental1550);
    *out = {g.round_trip_length, g.output_coupler_reflectivity, g.back_mirror_reflectivity, g.per_pass_loss, band};
  });
}

sqz_status sqz_finesse(const sqz_cavity_geometry* geometry, double* out) {
  return guarded([&] {
    require(geometry, "geometry");
    require(out, "out");
    *out = sqz::finesse(to_cpp(*geometry));
  });
}

sqz_status sqz_escape_efficiency(double transmission, double round_trip_loss, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = sqz::escape_efficiency(transmission, round_trip_loss);
  });
}

sqz_status sqz_cavity_characterize(const sqz_cavity_geometry* geometry, sqz_cavity_character* out) {
  return guarded([&] {
    require(geometry, "geometry");
    require(out, "out");
    const auto c = sqz::characterize(to_cpp(*geometry));
    *out = {c.fsr, c.finesse, c.fwhm, c.escape_efficiency};
  });
}

sqz_status sqz_total_efficiency(const sqz_loss_budget* budget, double* out) {
  return guarded([&] {
    require(budget, "budget");
    require(out, "out");
    *out = sqz::total_efficiency({budget->escape_efficiency, budget->optical_path_efficiency, budget->visibility,
                                  budget->quantum_efficiency});
  });
}

/* model */

sqz_status sqz_parametric_gain(double pump_power, double threshold_power, double* out_gain) {
  return guarded([&] {
    require(out_gain, "out_gain");
    *out_gain = sqz::parametric_gain(pump_power, threshold_power);
  });
}

sqz_status sqz_quadrature_variance(const sqz_opo_params* params, double pump_power, double sideband_frequency,
                                   sqz_quadrature quadrature, double* out_variance, int* phase_noise_warning) {
  return guarded([&] {
    require(params, "params");
    require(out_variance, "out_variance");
    const auto p = to_cpp(*params);
    *out_variance = sqz::quadrature_variance(p, pump_power, sideband_frequency, to_cpp(quadrature));
    if (phase_noise_warning) *phase_noise_warning = sqz::phase_noise_warning(p) ? 1 : 0;
  });
}

sqz_status sqz_max_detected_squeezing(const sqz_opo_params* params, double sideband_frequency,
                                      double* out_pump_power, double* out_variance_db) {
  return guarded([&] {
    require(params, "params");
    const auto best = sqz::max_detected_squeezing(to_cpp(*params), sideband_frequency);
    if (out_pump_power) *out_pump_power = best.pump_power;
    if (out_variance_db) *out_variance_db = best.variance_db;
  });
}

/* traces */

sqz_status sqz_trace_create(double pump_power, sqz_quadrature quadrature, sqz_trace** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (!(pump_power >= 0.0)) throw sqz::InvalidArgument("pump power must be non-negative");
    auto* t = new sqz_trace{};
    t->trace.pump_power = pump_power;
    t->trace.quadrature = to_cpp(quadrature);
    *out = t;
  });
}

void sqz_trace_free(sqz_trace* trace) { delete trace; }

sqz_status sqz_trace_append(sqz_trace* trace, double frequency, double variance) {
  return guarded([&] {
    require(trace, "trace");
    if (!std::isfinite(frequency) || !std::isfinite(variance) || !(variance > 0.0))
      throw sqz::InvalidArgument("trace point needs a finite frequency and a positive variance");
    auto& pts = trace->trace.points;
    if (!pts.empty() && !(frequency > pts.back().frequency))
      throw sqz::InvalidArgument("trace frequencies must be strictly increasing");
    pts.push_back({frequency, variance});
  });
}

sqz_status sqz_trace_set_metadata(sqz_trace* trace, double rbw, double vbw, double averages) {
  return guarded([&] {
    require(trace, "trace");
    auto set = [](std::optional<double>& field, double v) {
      if (v >= 0.0)
        field = v;
      else
        field.reset();
    };
    set(trace->trace.rbw, rbw);
    set(trace->trace.vbw, vbw);
    set(trace->trace.averages, averages);
  });
}

sqz_status sqz_trace_get_metadata(const sqz_trace* trace, double* rbw, double* vbw, double* averages) {
  return guarded([&] {
    require(trace, "trace");
    if (rbw) *rbw = trace->trace.rbw.value_or(kNaN);
    if (vbw) *vbw = trace->trace.vbw.value_or(kNaN);
    if (averages) *averages = trace->trace.averages.value_or(kNaN);
  });
}

size_t sqz_trace_size(const sqz_trace* trace) { return trace ? trace->trace.points.size() : 0; }

double sqz_trace_pump_power(const sqz_trace* trace) { return trace ? trace->trace.pump_power : kNaN; }

sqz_quadrature sqz_trace_quadrature(const sqz_trace* trace) {
  return trace ? to_c(trace->trace.quadrature) : SQZ_SQUEEZED;
}

sqz_status sqz_trace_point(const sqz_trace* trace, size_t index, double* frequency, double* variance) {
  return guarded([&] {
    require(trace, "trace");
    const auto& p = trace->trace.points.at(index);
    if (frequency) *frequency = p.frequency;
    if (variance) *variance = p.variance;
  });
}

sqz_status sqz_model_spectrum(const sqz_opo_params* params, double pump_power, const double* frequencies,
                              size_t count, sqz_quadrature quadrature, sqz_trace** out) {
  return guarded([&] {
    require(params, "params");
    require(out, "out");
    *out = nullptr;
    const auto grid = copy_array(frequencies, count, "frequencies");
    auto trace = sqz::spectrum(to_cpp(*params), pump_power, grid, to_cpp(quadrature));
    *out = new sqz_trace{std::move(trace)};
  });
}

/* fits */

void sqz_fit_result_free(sqz_fit_result* fit) { delete fit; }

size_t sqz_fit_num_params(const sqz_fit_result* fit) { return fit ? fit->fit.size() : 0; }

const char* sqz_fit_param_name(const sqz_fit_result* fit, size_t index) {
  if (!fit || index >= fit->fit.size()) return nullptr;
  return fit->fit.parameter_names[index].c_str();
}

double sqz_fit_value(const sqz_fit_result* fit, size_t index) {
  return (fit && index < fit->fit.size()) ? fit->fit.values[index] : kNaN;
}

double sqz_fit_std_error(const sqz_fit_result* fit, size_t index) {
  return (fit && index < fit->fit.size()) ? fit->fit.standard_errors[index] : kNaN;
}

double sqz_fit_covariance(const sqz_fit_result* fit, size_t row, size_t col) {
  if (!fit || row >= fit->fit.size() || col >= fit->fit.size()) return kNaN;
  return fit->fit.cov(row, col);
}

double sqz_fit_rss(const sqz_fit_result* fit) { return fit ? fit->fit.residual_sum_of_squares : kNaN; }

long sqz_fit_dof(const sqz_fit_result* fit) { return fit ? fit->fit.degrees_of_freedom : 0; }

int sqz_fit_converged(const sqz_fit_result* fit) { return (fit && fit->fit.converged) ? 1 : 0; }

int sqz_fit_iterations(const sqz_fit_result* fit) { return fit ? fit->fit.iterations : 0; }

double sqz_fit_condition_number(const sqz_fit_result* fit) { return fit ? fit->fit.condition_number : kNaN; }

const char* sqz_fit_message(const sqz_fit_result* fit) { return fit ? fit->fit.message.c_str() : nullptr; }

size_t sqz_fit_num_warnings(const sqz_fit_result* fit) { return fit ? fit->fit.warnings.size() : 0; }

const char* sqz_fit_warning(const sqz_fit_result* fit, size_t index) {
  if (!fit || index >= fit->fit.warnings.size()) return nullptr;
  return fit->fit.warnings[index].c_str();
}

sqz_status sqz_fit_gain(const sqz_gain_point* points, size_t count, double initial_threshold, sqz_fit_result** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (count > 0) require(points, "points");
    std::vector<sqz::GainMeasurement> data;
    data.reserve(count);
    for (size_t i = 0; i < count; ++i)
      data.push_back({points[i].pump_power, points[i].gain, points[i].power_fractional_uncertainty});
    *out = new sqz_fit_result{sqz::fit_gain(data, initial_threshold)};
  });
}

sqz_status sqz_fit_power_sweep(const sqz_sweep_point* squeezed, size_t n_squeezed,
                               const sqz_sweep_point* antisqueezed, size_t n_antisqueezed,
                               double sideband_frequency, double bandwidth, sqz_threshold_spec threshold,
                               sqz_fit_result** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    if (n_squeezed > 0) require(squeezed, "squeezed");
    if (n_antisqueezed > 0) require(antisqueezed, "antisqueezed");
    std::vector<sqz::SweepPoint> sq, asq;
    for (size_t i = 0; i < n_squeezed; ++i) sq.push_back({squeezed[i].pump_power, squeezed[i].variance});
    for (size_t i = 0; i < n_antisqueezed; ++i) asq.push_back({antisqueezed[i].pump_power, antisqueezed[i].variance});
    sqz::PowerSweepOptions opts;
    opts.sideband_frequency = sideband_frequency;
    opts.bandwidth = bandwidth;
    opts.threshold = to_cpp(threshold);
    *out = new sqz_fit_result{sqz::fit_power_sweep(sq, asq, opts)};
  });
}

sqz_status sqz_default_exclusion_bands(double half_width, sqz_band_interval* out, size_t capacity, size_t* count) {
  return guarded([&] {
    const auto bands = sqz::default_exclusion_bands(half_width);
    if (count) *count = bands.size();
    if (capacity > 0) require(out, "out");
    for (size_t i = 0; i < bands.size() && i < capacity; ++i) out[i] = {bands[i].low, bands[i].high};
  });
}

sqz_status sqz_fit_spectra(const sqz_trace* const* traces, size_t n_traces, const sqz_band_interval* bands,
                           size_t n_bands, const sqz_spectra_options* options, sqz_fit_result** out) {
  return guarded([&] {
    require(out, "out");
    require(options, "options");
    *out = nullptr;
    if (n_traces > 0) require(traces, "traces");
    if (n_bands > 0) require(bands, "bands");
    std::vector<sqz::SpectrumTrace> ts;
    for (size_t i = 0; i < n_traces; ++i) {
      require(traces[i], "traces[i]");
      ts.push_back(traces[i]->trace);
    }
    std::vector<sqz::ExclusionBand> bs;
    for (size_t i = 0; i < n_bands; ++i) bs.push_back({bands[i].low, bands[i].high});
    sqz::SpectraFitOptions opts;
    opts.threshold = to_cpp(options->threshold);
    opts.per_trace_phase_noise = options->per_trace_phase_noise != 0;
    if (options->initial_bandwidth > 0.0) opts.initial_bandwidth = options->initial_bandwidth;
    *out = new sqz_fit_result{sqz::fit_spectra(ts, bs, opts)};
  });
}

sqz_status sqz_correct_electronic_noise(double measured_variance, double electronic_noise, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = sqz::correct_electronic_noise(measured_variance, electronic_noise);
  });
}

sqz_status sqz_add_electronic_noise(double true_variance, double electronic_noise, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = sqz::add_electronic_noise(true_variance, electronic_noise);
  });
}

/* noise analysis */

sqz_status sqz_series_create(double sample_rate, const double* samples, size_t count, sqz_series** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    sqz::TimeSeries ts{sample_rate, copy_array(samples, count, "samples")};
    ts.validate();
    *out = new sqz_series{std::move(ts)};
  });
}

void sqz_series_free(sqz_series* series) { delete series; }

size_t sqz_series_size(const sqz_series* series) { return series ? series->series.samples.size() : 0; }

double sqz_series_sample_rate(const sqz_series* series) { return series ? series->series.sample_rate : kNaN; }

const double* sqz_series_data(const sqz_series* series) {
  return series ? series->series.samples.data() : nullptr;
}

sqz_status sqz_normalize_fractional(const sqz_series* series, sqz_series** out) {
  return guarded([&] {
    require(series, "series");
    require(out, "out");
    *out = nullptr;
    *out = new sqz_series{sqz::normalize_fractional(series->series)};
  });
}

sqz_status sqz_default_averaging_factors(size_t num_samples, size_t* out, size_t capacity, size_t* count) {
  return guarded([&] {
    const auto factors = sqz::default_averaging_factors(num_samples);
    if (count) *count = factors.size();
    if (capacity > 0) require(out, "out");
    for (size_t i = 0; i < factors.size() && i < capacity; ++i) out[i] = factors[i];
  });
}

sqz_status sqz_oadev(const sqz_series* series, const size_t* factors, size_t n_factors, sqz_allan_point* out,
                     size_t capacity, size_t* count, size_t* omitted) {
  return guarded([&] {
    require(series, "series");
    require(count, "count");
    if (n_factors > 0) require(factors, "factors");
    const std::vector<size_t> ms(factors, factors + n_factors);
    const auto res = sqz::oadev(series->series, ms);
    if (res.points.size() > capacity) throw std::out_of_range("output buffer too small for Allan points");
    if (!res.points.empty()) require(out, "out");
    for (size_t i = 0; i < res.points.size(); ++i)
      out[i] = {res.points[i].tau, res.points[i].oadev, res.points[i].num_terms};
    *count = res.points.size();
    if (omitted) *omitted = res.warnings.size();
  });
}

sqz_welch_options sqz_welch_default_options(void) { return {0, 0.5, SQZ_WINDOW_HANN, 1}; }

size_t sqz_welch_num_bins(const sqz_series* series, const sqz_welch_options* options) {
  if (!series) return 0;
  size_t seg = options ? options->segment_length : 0;
  if (seg == 0) seg = sqz::default_segment_length(series->series.samples.size());
  return seg / 2 + 1;
}

sqz_status sqz_welch_psd(const sqz_series* series, const sqz_welch_options* options, sqz_psd_point* out,
                         size_t capacity, size_t* count) {
  return guarded([&] {
    require(series, "series");
    require(count, "count");
    const sqz_welch_options opts = options ? *options : sqz_welch_default_options();
    const auto psd = sqz::welch_psd(series->series, to_cpp(opts));
    if (psd.size() > capacity) throw std::out_of_range("output buffer too small for PSD bins");
    require(out, "out");
    for (size_t i = 0; i < psd.size(); ++i) out[i] = {psd[i].frequency, psd[i].density};
    *count = psd.size();
  });
}

/* simulator */

sqz_status sqz_sim_gain(double threshold, const double* powers, size_t count, double power_fractional_error,
                        uint64_t seed, sqz_gain_point* out) {
  return guarded([&] {
    if (count > 0) require(out, "out");
    const auto ps = copy_array(powers, count, "powers");
    const auto data = sqz::gen_gain_data(threshold, ps, power_fractional_error, sqz::Seed{seed});
    for (size_t i = 0; i < data.size(); ++i)
      out[i] = {data[i].pump_power, data[i].gain, data[i].power_fractional_uncertainty};
  });
}

sqz_status sqz_sim_spectrum(const sqz_opo_params* params, double pump_power, const double* frequencies, size_t count,
                            sqz_quadrature quadrature, const sqz_analyzer_config* analyzer, uint64_t seed,
                            sqz_trace** out) {
  return guarded([&] {
    require(params, "params");
    require(analyzer, "analyzer");
    require(out, "out");
    *out = nullptr;
    sqz::SpectrumAnalyzerConfig sa;
    sa.rbw = analyzer->rbw;
    sa.vbw = analyzer->vbw;
    sa.trace_averages = analyzer->trace_averages;
    sa.electronic_noise = analyzer->electronic_noise;
    if (analyzer->n_spurs > 0) require(analyzer->spurs, "analyzer->spurs");
    for (size_t i = 0; i < analyzer->n_spurs; ++i)
      sa.spurs.push_back({analyzer->spurs[i].frequency, analyzer->spurs[i].height_db, analyzer->spurs[i].width});
    const auto grid = copy_array(frequencies, count, "frequencies");
    auto trace = sqz::gen_spectrum_trace(to_cpp(*params), pump_power, grid, to_cpp(quadrature), sa, sqz::Seed{seed});
    *out = new sqz_trace{std::move(trace)};
  });
}

sqz_status sqz_sim_polarization_noise(double duration, double sample_rate, double white_std, double random_walk_step,
                                      uint64_t seed, sqz_series** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto ts = sqz::gen_polarization_noise(duration, sample_rate, white_std, random_walk_step, sqz::Seed{seed});
    *out = new sqz_series{std::move(ts)};
  });
}

}  // extern "C"
