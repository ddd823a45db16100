/*
 * C interface to the squeezed-light OPO toolkit.
 *
 * Every function returns an sqz_status. On failure a human-readable message
 * is available from sqz_last_error() on the calling thread until the next
 * call into the library on that thread. Objects behind opaque handles are
 * created by the library and released with the matching *_free function;
 * passing NULL to a *_free function is a no-op.
 *
 * Units are SI throughout: meters, hertz, watts, radians, seconds. Variances
 * are linear and relative to shot noise unless a name says _db.
 */
#ifndef SQZ_SQZ_H
#define SQZ_SQZ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SQZ_BUILDING_LIBRARY)
#    define SQZ_API __declspec(dllexport)
#  else
#    define SQZ_API __declspec(dllimport)
#  endif
#else
#  define SQZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sqz_status {
  SQZ_OK = 0,
  SQZ_ERR_DOMAIN = 1,           /* input outside the model's domain */
  SQZ_ERR_INVALID_ARGUMENT = 2, /* malformed or inconsistent input */
  SQZ_ERR_NUMERICAL = 3,        /* non-finite values during a computation */
  SQZ_ERR_OUT_OF_RANGE = 4,     /* index or buffer capacity exceeded */
  SQZ_ERR_INTERNAL = 5
} sqz_status;

SQZ_API const char* sqz_last_error(void);
SQZ_API const char* sqz_version(void);
SQZ_API const char* sqz_status_string(sqz_status status);

/* ---- physics ---------------------------------------------------------- */

typedef enum sqz_band { SQZ_BAND_1550 = 0, SQZ_BAND_775 = 1 } sqz_band;

typedef struct sqz_cavity_geometry {
  double round_trip_length;            /* m */
  double output_coupler_reflectivity;  /* power fraction */
  double back_mirror_reflectivity;     /* power fraction */
  double per_pass_loss;                /* crossed twice per round trip */
  sqz_band band;
} sqz_cavity_geometry;

typedef struct sqz_cavity_character {
  double fsr;      /* Hz */
  double finesse;
  double fwhm;     /* Hz */
  double escape_efficiency;
} sqz_cavity_character;

typedef struct sqz_loss_budget {
  double escape_efficiency;
  double optical_path_efficiency;
  double visibility;
  double quantum_efficiency;
} sqz_loss_budget;

SQZ_API sqz_status sqz_db_from_ratio(double ratio, double* out_db);
SQZ_API sqz_status sqz_ratio_from_db(double db, double* out_ratio);
SQZ_API sqz_status sqz_free_spectral_range(double round_trip_length, double* out_hz);
SQZ_API sqz_status sqz_default_geometry(sqz_band band, sqz_cavity_geometry* out);
SQZ_API sqz_status sqz_finesse(const sqz_cavity_geometry* geometry, double* out);
SQZ_API sqz_status sqz_escape_efficiency(double transmission, double round_trip_loss, double* out);
SQZ_API sqz_status sqz_cavity_characterize(const sqz_cavity_geometry* geometry, sqz_cavity_character* out);
SQZ_API sqz_status sqz_total_efficiency(const sqz_loss_budget* budget, double* out);

/* ---- OPO model -------------------------------------------------------- */

typedef enum sqz_quadrature { SQZ_SQUEEZED = 0, SQZ_ANTISQUEEZED = 1 } sqz_quadrature;

typedef struct sqz_opo_params {
  double threshold_power;   /* W */
  double fwhm_bandwidth;    /* Hz, ordinary frequency */
  double total_efficiency;
  double phase_noise_rms;   /* rad */
} sqz_opo_params;

SQZ_API sqz_status sqz_parametric_gain(double pump_power, double threshold_power, double* out_gain);

/* phase_noise_warning (may be NULL) is set to 1 when phi is beyond the
 * small-angle validity limit of the model. */
SQZ_API sqz_status sqz_quadrature_variance(const sqz_opo_params* params, double pump_power,
                                           double sideband_frequency, sqz_quadrature quadrature,
                                           double* out_variance, int* phase_noise_warning);

SQZ_API sqz_status sqz_max_detected_squeezing(const sqz_opo_params* params, double sideband_frequency,
                                              double* out_pump_power, double* out_variance_db);

/* ---- spectrum traces (opaque) ----------------------------------------- */

typedef struct sqz_trace sqz_trace;

SQZ_API sqz_status sqz_trace_create(double pump_power, sqz_quadrature quadrature, sqz_trace** out);
SQZ_API void sqz_trace_free(sqz_trace* trace);
/* Appends a point; frequencies must be added in strictly increasing order. */
SQZ_API sqz_status sqz_trace_append(sqz_trace* trace, double frequency, double variance);
/* Metadata; pass a negative value to clear a field. */
SQZ_API sqz_status sqz_trace_set_metadata(sqz_trace* trace, double rbw, double vbw, double averages);
/* Each out pointer may be NULL; absent metadata is reported as NaN. */
SQZ_API sqz_status sqz_trace_get_metadata(const sqz_trace* trace, double* rbw, double* vbw, double* averages);
SQZ_API size_t sqz_trace_size(const sqz_trace* trace);
SQZ_API double sqz_trace_pump_power(const sqz_trace* trace);
SQZ_API sqz_quadrature sqz_trace_quadrature(const sqz_trace* trace);
SQZ_API sqz_status sqz_trace_point(const sqz_trace* trace, size_t index, double* frequency, double* variance);

SQZ_API sqz_status sqz_model_spectrum(const sqz_opo_params* params, double pump_power, const double* frequencies,
                                      size_t count, sqz_quadrature quadrature, sqz_trace** out);

/* ---- estimation ------------------------------------------------------- */

typedef struct sqz_gain_point {
  double pump_power;  /* W */
  double gain;
  double power_fractional_uncertainty;
} sqz_gain_point;

typedef struct sqz_sweep_point {
  double pump_power;  /* W */
  double variance;    /* linear */
} sqz_sweep_point;

typedef struct sqz_band_interval {
  double low;   /* Hz */
  double high;  /* Hz */
} sqz_band_interval;

typedef struct sqz_fit_result sqz_fit_result;

SQZ_API void sqz_fit_result_free(sqz_fit_result* fit);
SQZ_API size_t sqz_fit_num_params(const sqz_fit_result* fit);
SQZ_API const char* sqz_fit_param_name(const sqz_fit_result* fit, size_t index);
SQZ_API double sqz_fit_value(const sqz_fit_result* fit, size_t index);
SQZ_API double sqz_fit_std_error(const sqz_fit_result* fit, size_t index);
SQZ_API double sqz_fit_covariance(const sqz_fit_result* fit, size_t row, size_t col);
SQZ_API double sqz_fit_rss(const sqz_fit_result* fit);
SQZ_API long sqz_fit_dof(const sqz_fit_result* fit);
SQZ_API int sqz_fit_converged(const sqz_fit_result* fit);
SQZ_API int sqz_fit_iterations(const sqz_fit_result* fit);
SQZ_API double sqz_fit_condition_number(const sqz_fit_result* fit);
SQZ_API const char* sqz_fit_message(const sqz_fit_result* fit);
SQZ_API size_t sqz_fit_num_warnings(const sqz_fit_result* fit);
SQZ_API const char* sqz_fit_warning(const sqz_fit_result* fit, size_t index);

/* initial_threshold <= 0 selects 1.2 x the largest pump power. */
SQZ_API sqz_status sqz_fit_gain(const sqz_gain_point* points, size_t count, double initial_threshold,
                                sqz_fit_result** out);

typedef struct sqz_threshold_spec {
  int free;      /* nonzero: fit the threshold starting from value (0 = auto) */
  double value;  /* W */
} sqz_threshold_spec;

SQZ_API sqz_status sqz_fit_power_sweep(const sqz_sweep_point* squeezed, size_t n_squeezed,
                                       const sqz_sweep_point* antisqueezed, size_t n_antisqueezed,
                                       double sideband_frequency, double bandwidth, sqz_threshold_spec threshold,
                                       sqz_fit_result** out);

typedef struct sqz_spectra_options {
  sqz_threshold_spec threshold;
  int per_trace_phase_noise;
  double initial_bandwidth;  /* Hz; <= 0 to derive it from the data */
} sqz_spectra_options;

/* Writes up to capacity default bands (+-half_width around 40/80/100 MHz);
 * *count receives the number of bands (3). */
SQZ_API sqz_status sqz_default_exclusion_bands(double half_width, sqz_band_interval* out, size_t capacity,
                                               size_t* count);

SQZ_API sqz_status sqz_fit_spectra(const sqz_trace* const* traces, size_t n_traces, const sqz_band_interval* bands,
                                   size_t n_bands, const sqz_spectra_options* options, sqz_fit_result** out);

SQZ_API sqz_status sqz_correct_electronic_noise(double measured_variance, double electronic_noise, double* out);
SQZ_API sqz_status sqz_add_electronic_noise(double true_variance, double electronic_noise, double* out);

/* ---- noise analysis --------------------------------------------------- */

typedef struct sqz_series sqz_series;

typedef struct sqz_allan_point {
  double tau;  /* s */
  double oadev;
  size_t num_terms;
} sqz_allan_point;

typedef struct sqz_psd_point {
  double frequency;  /* Hz */
  double density;    /* units^2 / Hz */
} sqz_psd_point;

typedef enum sqz_window { SQZ_WINDOW_HANN = 0, SQZ_WINDOW_RECTANGULAR = 1 } sqz_window;

typedef struct sqz_welch_options {
  size_t segment_length;  /* 0 = N/8 rounded down to a power of two */
  double overlap_fraction;
  sqz_window window;
  int detrend_constant;   /* nonzero: subtract each segment's mean */
} sqz_welch_options;

SQZ_API sqz_status sqz_series_create(double sample_rate, const double* samples, size_t count, sqz_series** out);
SQZ_API void sqz_series_free(sqz_series* series);
SQZ_API size_t sqz_series_size(const sqz_series* series);
SQZ_API double sqz_series_sample_rate(const sqz_series* series);
SQZ_API const double* sqz_series_data(const sqz_series* series);

SQZ_API sqz_status sqz_normalize_fractional(const sqz_series* series, sqz_series** out);

/* Writes up to capacity factors; *count receives the total number. */
SQZ_API sqz_status sqz_default_averaging_factors(size_t num_samples, size_t* out, size_t capacity, size_t* count);

/* Factors too large for the series are skipped; *count receives the number
 * of points written and *omitted (may be NULL) the number skipped. */
SQZ_API sqz_status sqz_oadev(const sqz_series* series, const size_t* factors, size_t n_factors,
                             sqz_allan_point* out, size_t capacity, size_t* count, size_t* omitted);

SQZ_API sqz_welch_options sqz_welch_default_options(void);
SQZ_API size_t sqz_welch_num_bins(const sqz_series* series, const sqz_welch_options* options);
SQZ_API sqz_status sqz_welch_psd(const sqz_series* series, const sqz_welch_options* options, sqz_psd_point* out,
                                 size_t capacity, size_t* count);

/* ---- simulator -------------------------------------------------------- */

typedef struct sqz_spur {
  double frequency;  /* Hz */
  double height_db;
  double width;      /* Hz, Gaussian standard deviation */
} sqz_spur;

typedef struct sqz_analyzer_config {
  double rbw;             /* Hz */
  double vbw;             /* Hz */
  double trace_averages;  /* +inf disables estimation noise */
  double electronic_noise;
  const sqz_spur* spurs;
  size_t n_spurs;
} sqz_analyzer_config;

SQZ_API sqz_status sqz_sim_gain(double threshold, const double* powers, size_t count, double power_fractional_error,
                                uint64_t seed, sqz_gain_point* out);

SQZ_API sqz_status sqz_sim_spectrum(const sqz_opo_params* params, double pump_power, const double* frequencies,
                                    size_t count, sqz_quadrature quadrature, const sqz_analyzer_config* analyzer,
                                    uint64_t seed, sqz_trace** out);

SQZ_API sqz_status sqz_sim_polarization_noise(double duration, double sample_rate, double white_std,
                                              double random_walk_step, uint64_t seed, sqz_series** out);

#ifdef __cplusplus
}
#endif

#endif /* SQZ_SQZ_H */
