#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "sqz/sqz.h"

namespace {

const sqz_opo_params kFitted{5.12e-3, 66e6, 0.92, 0.019};

std::string last_error() { return sqz_last_error(); }

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::string(sqz_version()) == "0.1.0");
  CHECK(std::string(sqz_status_string(SQZ_OK)) == "ok");
  CHECK(std::strlen(sqz_status_string(SQZ_ERR_DOMAIN)) > 0);
}

TEST_CASE("physics through the C interface") {
  double v = 0.0;
  REQUIRE(sqz_db_from_ratio(0.5, &v) == SQZ_OK);
  CHECK(v == doctest::Approx(-3.0103).epsilon(1e-5));
  CHECK(sqz_db_from_ratio(-1.0, &v) == SQZ_ERR_DOMAIN);
  CHECK(last_error().find("positive") != std::string::npos);
  CHECK(sqz_db_from_ratio(1.0, nullptr) == SQZ_ERR_INVALID_ARGUMENT);
  CHECK(last_error().find("NULL") != std::string::npos);

  sqz_cavity_geometry g{};
  REQUIRE(sqz_default_geometry(SQZ_BAND_775, &g) == SQZ_OK);
  sqz_cavity_character c{};
  REQUIRE(sqz_cavity_characterize(&g, &c) == SQZ_OK);
  CHECK(c.finesse == doctest::Approx(207.16).epsilon(1e-4));
  g.output_coupler_reflectivity = 1.5;
  CHECK(sqz_cavity_characterize(&g, &c) == SQZ_ERR_INVALID_ARGUMENT);

  const sqz_loss_budget budget{0.97, std::pow(0.999, 7), 0.99, 0.99};
  REQUIRE(sqz_total_efficiency(&budget, &v) == SQZ_OK);
  CHECK(v == doctest::Approx(0.9346).epsilon(1e-3));
}

TEST_CASE("model through the C interface") {
  double g = 0.0;
  REQUIRE(sqz_parametric_gain(2.5e-3, 5.12e-3, &g) == SQZ_OK);
  CHECK(g == doctest::Approx(11.02).epsilon(1e-3));
  CHECK(sqz_parametric_gain(6e-3, 5.12e-3, &g) == SQZ_ERR_DOMAIN);

  double vm = 0.0;
  int warn = -1;
  REQUIRE(sqz_quadrature_variance(&kFitted, 2.5e-3, 5e6, SQZ_SQUEEZED, &vm, &warn) == SQZ_OK);
  CHECK(vm == doctest::Approx(0.1244).epsilon(1e-3));
  CHECK(warn == 0);
  const sqz_opo_params noisy{5.12e-3, 66e6, 0.92, 0.2};
  REQUIRE(sqz_quadrature_variance(&noisy, 2.5e-3, 5e6, SQZ_SQUEEZED, &vm, &warn) == SQZ_OK);
  CHECK(warn == 1);
  CHECK(sqz_quadrature_variance(&kFitted, 2.5e-3, 5e6, static_cast<sqz_quadrature>(7), &vm, nullptr) ==
        SQZ_ERR_INVALID_ARGUMENT);

  double p = 0.0, db = 0.0;
  REQUIRE(sqz_max_detected_squeezing(&kFitted, 5e6, &p, &db) == SQZ_OK);
  CHECK(db < -9.0);
}

TEST_CASE("trace handles") {
  sqz_trace* t = nullptr;
  REQUIRE(sqz_trace_create(2e-3, SQZ_ANTISQUEEZED, &t) == SQZ_OK);
  REQUIRE(t != nullptr);
  CHECK(sqz_trace_append(t, 1e6, 5.0) == SQZ_OK);
  CHECK(sqz_trace_append(t, 2e6, 4.0) == SQZ_OK);
  CHECK(sqz_trace_append(t, 2e6, 4.0) == SQZ_ERR_INVALID_ARGUMENT);
  CHECK(sqz_trace_append(t, 3e6, -1.0) == SQZ_ERR_INVALID_ARGUMENT);
  CHECK(sqz_trace_size(t) == 2);
  CHECK(sqz_trace_pump_power(t) == 2e-3);
  CHECK(sqz_trace_quadrature(t) == SQZ_ANTISQUEEZED);

  double f = 0.0, v = 0.0;
  REQUIRE(sqz_trace_point(t, 1, &f, &v) == SQZ_OK);
  CHECK(f == 2e6);
  CHECK(v == 4.0);
  CHECK(sqz_trace_point(t, 2, &f, &v) == SQZ_ERR_OUT_OF_RANGE);

  double rbw = 0.0, vbw = 0.0, avg = 0.0;
  REQUIRE(sqz_trace_get_metadata(t, &rbw, &vbw, &avg) == SQZ_OK);
  CHECK(std::isnan(rbw));
  REQUIRE(sqz_trace_set_metadata(t, 300e3, 300.0, 100.0) == SQZ_OK);
  REQUIRE(sqz_trace_get_metadata(t, &rbw, nullptr, &avg) == SQZ_OK);
  CHECK(rbw == 300e3);
  CHECK(avg == 100.0);
  REQUIRE(sqz_trace_set_metadata(t, -1.0, 300.0, 100.0) == SQZ_OK);
  REQUIRE(sqz_trace_get_metadata(t, &rbw, nullptr, nullptr) == SQZ_OK);
  CHECK(std::isnan(rbw));
  sqz_trace_free(t);
  sqz_trace_free(nullptr);
}

TEST_CASE("gain fit round trip") {
  std::vector<double> powers;
  for (int i = 0; i <= 16; ++i) powers.push_back(0.5e-3 + 0.25e-3 * i);
  std::vector<sqz_gain_point> pts(powers.size());
  REQUIRE(sqz_sim_gain(5.12e-3, powers.data(), powers.size(), 0.0, 1, pts.data()) == SQZ_OK);
  sqz_fit_result* fit = nullptr;
  REQUIRE(sqz_fit_gain(pts.data(), pts.size(), 0.0, &fit) == SQZ_OK);
  REQUIRE(sqz_fit_num_params(fit) == 1);
  CHECK(std::string(sqz_fit_param_name(fit, 0)) == "threshold_power");
  CHECK(sqz_fit_value(fit, 0) == doctest::Approx(5.12e-3).epsilon(1e-6));
  CHECK(sqz_fit_converged(fit) == 1);
  CHECK(sqz_fit_dof(fit) == 16);
  CHECK(sqz_fit_param_name(fit, 3) == nullptr);
  CHECK(std::isnan(sqz_fit_value(fit, 3)));
  CHECK(sqz_fit_message(fit) != nullptr);
  sqz_fit_result_free(fit);

  fit = reinterpret_cast<sqz_fit_result*>(0x1);
  CHECK(sqz_fit_gain(pts.data(), 1, 0.0, &fit) == SQZ_ERR_INVALID_ARGUMENT);
  CHECK(fit == nullptr);
}

TEST_CASE("power sweep and spectra fits") {
  std::vector<sqz_sweep_point> sq, asq;
  for (int i = 1; i <= 16; ++i) {
    const double p = 0.25e-3 * i;
    double vm = 0.0, vp = 0.0;
    sqz_quadrature_variance(&kFitted, p, 5e6, SQZ_SQUEEZED, &vm, nullptr);
    sqz_quadrature_variance(&kFitted, p, 5e6, SQZ_ANTISQUEEZED, &vp, nullptr);
    sq.push_back({p, vm});
    asq.push_back({p, vp});
  }
  sqz_fit_result* fit = nullptr;
  REQUIRE(sqz_fit_power_sweep(sq.data(), sq.size(), asq.data(), asq.size(), 5e6, 66e6, {0, 5.12e-3}, &fit) ==
          SQZ_OK);
  CHECK(sqz_fit_value(fit, 0) == doctest::Approx(0.92).epsilon(1e-6));
  CHECK(sqz_fit_value(fit, 1) == doctest::Approx(0.019).epsilon(1e-5));
  CHECK(sqz_fit_covariance(fit, 0, 1) == sqz_fit_covariance(fit, 1, 0));
  sqz_fit_result_free(fit);

  std::vector<double> grid;
  for (int i = 1; i <= 120; ++i) grid.push_back(i * 1e6);
  sqz_trace* traces[2] = {nullptr, nullptr};
  REQUIRE(sqz_model_spectrum(&kFitted, 2.5e-3, grid.data(), grid.size(), SQZ_SQUEEZED, &traces[0]) == SQZ_OK);
  REQUIRE(sqz_model_spectrum(&kFitted, 2.5e-3, grid.data(), grid.size(), SQZ_ANTISQUEEZED, &traces[1]) == SQZ_OK);
  sqz_band_interval bands[4];
  size_t n_bands = 0;
  REQUIRE(sqz_default_exclusion_bands(2e6, bands, 4, &n_bands) == SQZ_OK);
  CHECK(n_bands == 3);
  CHECK(bands[0].low == 38e6);
  const sqz_spectra_options opts{{0, 5.12e-3}, 0, 0.0};
  REQUIRE(sqz_fit_spectra(traces, 2, bands, n_bands, &opts, &fit) == SQZ_OK);
  CHECK(std::string(sqz_fit_param_name(fit, 1)) == "fwhm_bandwidth");
  CHECK(sqz_fit_value(fit, 1) == doctest::Approx(66e6).epsilon(1e-6));
  sqz_fit_result_free(fit);

  const sqz_band_interval all{0.0, 1e9};
  CHECK(sqz_fit_spectra(traces, 2, &all, 1, &opts, &fit) == SQZ_ERR_INVALID_ARGUMENT);
  CHECK(last_error().find("exclusion") != std::string::npos);
  sqz_trace_free(traces[0]);
  sqz_trace_free(traces[1]);
}

TEST_CASE("electronic noise helpers") {
  double c = 0.0, back = 0.0;
  REQUIRE(sqz_correct_electronic_noise(0.12589254117941673, 0.0063095734448019, &c) == SQZ_OK);
  CHECK(c == doctest::Approx(0.12034).epsilon(1e-4));
  REQUIRE(sqz_add_electronic_noise(c, 0.0063095734448019, &back) == SQZ_OK);
  CHECK(back == doctest::Approx(0.12589254117941673).epsilon(1e-12));
  CHECK(sqz_correct_electronic_noise(0.001, 0.0063, &c) == SQZ_ERR_DOMAIN);
}

TEST_CASE("series, Allan deviation and PSD") {
  sqz_series* s = nullptr;
  REQUIRE(sqz_sim_polarization_noise(100.0, 100.0, 1e-3, 0.0, 7, &s) == SQZ_OK);
  CHECK(sqz_series_size(s) == 10000);
  CHECK(sqz_series_sample_rate(s) == 100.0);
  sqz_series* y = nullptr;
  REQUIRE(sqz_normalize_fractional(s, &y) == SQZ_OK);

  size_t n_factors = 0;
  REQUIRE(sqz_default_averaging_factors(sqz_series_size(y), nullptr, 0, &n_factors) == SQZ_OK);
  std::vector<size_t> factors(n_factors + 1);
  REQUIRE(sqz_default_averaging_factors(sqz_series_size(y), factors.data(), n_factors, &n_factors) == SQZ_OK);
  factors.back() = 100000;  // too large for the series

  std::vector<sqz_allan_point> pts(factors.size());
  size_t count = 0, omitted = 0;
  REQUIRE(sqz_oadev(y, factors.data(), factors.size(), pts.data(), pts.size(), &count, &omitted) == SQZ_OK);
  CHECK(count == n_factors);
  CHECK(omitted == 1);
  CHECK(pts[0].oadev == doctest::Approx(1e-3).epsilon(0.05));
  CHECK(sqz_oadev(y, factors.data(), factors.size(), pts.data(), 1, &count, nullptr) == SQZ_ERR_OUT_OF_RANGE);

  sqz_welch_options o = sqz_welch_default_options();
  CHECK(o.segment_length == 0);
  CHECK(o.window == SQZ_WINDOW_HANN);
  const size_t bins = sqz_welch_num_bins(y, &o);
  CHECK(bins == 1024 / 2 + 1);
  std::vector<sqz_psd_point> psd(bins);
  REQUIRE(sqz_welch_psd(y, &o, psd.data(), psd.size(), &count) == SQZ_OK);
  CHECK(count == bins);
  CHECK(psd.back().frequency == 50.0);
  o.overlap_fraction = 0.99;
  CHECK(sqz_welch_psd(y, &o, psd.data(), psd.size(), &count) == SQZ_ERR_INVALID_ARGUMENT);

  sqz_series_free(y);
  sqz_series_free(s);

  const double bad[] = {1.0, NAN};
  CHECK(sqz_series_create(1.0, bad, 2, &s) == SQZ_ERR_INVALID_ARGUMENT);
}

TEST_CASE("simulated spectra are seed-deterministic") {
  std::vector<double> grid;
  for (int i = 1; i <= 50; ++i) grid.push_back(i * 2e6);
  const sqz_spur spurs[] = {{40e6, 15.0, 0.5e6}};
  const sqz_analyzer_config sa{300e3, 300.0, 100.0, 0.0063, spurs, 1};
  sqz_trace *a = nullptr, *b = nullptr;
  REQUIRE(sqz_sim_spectrum(&kFitted, 2.5e-3, grid.data(), grid.size(), SQZ_SQUEEZED, &sa, 42, &a) == SQZ_OK);
  REQUIRE(sqz_sim_spectrum(&kFitted, 2.5e-3, grid.data(), grid.size(), SQZ_SQUEEZED, &sa, 42, &b) == SQZ_OK);
  for (size_t i = 0; i < grid.size(); ++i) {
    double fa, va, fb, vb;
    sqz_trace_point(a, i, &fa, &va);
    sqz_trace_point(b, i, &fb, &vb);
    CHECK(va == vb);
  }
  sqz_trace_free(a);
  sqz_trace_free(b);
}

TEST_CASE("last error is per thread") {
  double v = 0.0;
  CHECK(sqz_db_from_ratio(-1.0, &v) == SQZ_ERR_DOMAIN);
  const std::string here = last_error();
  std::string there;
  std::thread worker([&] {
    sqz_parametric_gain(1.0, 0.5, &v);
    there = sqz_last_error();
  });
  worker.join();
  CHECK(here == last_error());
  CHECK(there != here);
  CHECK(sqz_db_from_ratio(2.0, &v) == SQZ_OK);
  CHECK(last_error().empty());
}
