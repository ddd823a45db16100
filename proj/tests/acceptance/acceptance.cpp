// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/cli.hpp"
#include "cli/csv.hpp"
#include "sqz/estimation.hpp"
#include "sqz/least_squares.hpp"
#include "sqz/noise_analysis.hpp"
#include "sqz/opo_model.hpp"
#include "sqz/physics.hpp"
#include "sqz/simulator.hpp"

namespace fs = std::filesystem;
using namespace sqz;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what + (ok ? "" : " [failed]");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CliResult {
  int code;
  std::string out;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str()};
}

const OpoModelParams kNominal{5.12e-3, 66e6, 0.92, 0.019};
constexpr double kReferenceSeEta = 0.01;
constexpr double kReferenceSePhi = 0.001;

// 1 -------------------------------------------------------------------------
Outcome threshold_fit() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = fs::temp_directory_path() / "sqz_acceptance_gain";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<double> estimates, errors;
  bool all_ok = true;
  for (int seed = 1; seed <= 100; ++seed) {
    const std::string csv = (dir / ("gain_" + std::to_string(seed) + ".csv")).string();
    const auto sim = cli({"sim", "gain", "--pthr", "5.12mW", "--power-min", "0.5mW", "--power-max", "4.5mW",
                          "--power-step", "0.25mW", "--power-error", "0.05", "--seed", std::to_string(seed), "--out",
                          csv, "-q"});
    const auto fit = cli({"fit", "gain", "--in", csv, "--json", "-q"});
    if (sim.code != 0 || fit.code != 0) {
      all_ok = false;
      continue;
    }
    const auto j = nlohmann::json::parse(fit.out);
    estimates.push_back(j["params"]["threshold_power"].get<double>());
    errors.push_back(j["std_errors"]["threshold_power"].get<double>());
  }
  fs::remove_all(dir);
  const double elapsed = seconds_since(t0);
  require(o, all_ok && estimates.size() == 100, "100 seeds simulated and fitted");
  if (estimates.empty()) return o;
  double mean = 0.0, mean_se = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    mean += estimates[i];
    mean_se += errors[i];
  }
  mean /= estimates.size();
  mean_se /= errors.size();
  for (double e : estimates) spread += (e - mean) * (e - mean);
  spread = std::sqrt(spread / (estimates.size() - 1));
  const double bias_mw = (mean - 5.12e-3) * 1e3;
  require(o, std::abs(bias_mw) < 0.05, fmt("bias %+.4f mW (< 0.05)", bias_mw));
  const double ratio = mean_se / 0.03e-3;
  require(o, ratio >= 1.0 / 3.0 && ratio <= 3.0, fmt("mean SE %.4f mW", mean_se * 1e3) + fmt(" (x%.2f of 0.03 mW)", ratio));
  o.detail += fmt("; empirical spread %.4f mW", spread * 1e3);
  require(o, elapsed < 10.0, fmt("runtime %.2f s (< 10)", elapsed));
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome operating_point() {
  Outcome o;
  const double db = db_from_ratio(quadrature_variance(kNominal, 2.5e-3, 5e6, Quadrature::Squeezed));
  require(o, std::abs(db - (-9.3)) <= 0.5, fmt("squeezing %.3f dB vs -9.3 dB (tol 0.5)", db));
  const auto r = cli({"model", "eval", "--pthr", "5.12mW", "--kappa", "66MHz", "--eta", "0.92", "--phi", "19mrad",
                      "--power", "2.5mW", "--freq", "5MHz"});
  require(o, r.code == 0 && r.out == "squeezed: -9.05 dB\nantisqueezed: +13.73 dB\n", "CLI prints -9.05 / +13.73 dB");
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome power_sweep_fit() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  SpectrumAnalyzerConfig sa;  // 300 kHz RBW, 300 Hz VBW, 100 averages
  sa.electronic_noise = ratio_from_db(-22.0);
  const std::vector<double> f{5e6};
  int passed = 0;
  const int seeds = 20;
  double worst_eta = 0.0, worst_phi = 0.0, eta0 = 0.0, phi0 = 0.0, se_eta0 = 0.0, se_phi0 = 0.0;
  for (int s = 0; s < seeds; ++s) {
    std::vector<SweepPoint> sq, asq;
    std::uint64_t seed = 5000 + 100 * static_cast<std::uint64_t>(s);
    for (int i = 0; i <= 16; ++i) {
      const double p = 0.25e-3 * i;
      for (auto q : {Quadrature::Squeezed, Quadrature::Antisqueezed}) {
        const auto t = gen_spectrum_trace(kNominal, p, f, q, sa, Seed{seed++});
        const double v = correct_electronic_noise(t.points[0].variance, sa.electronic_noise);
        (q == Quadrature::Squeezed ? sq : asq).push_back({p, v});
      }
    }
    const auto fit = fit_power_sweep(sq, asq, {5e6, 66e6, ThresholdSpec::fixed(5.12e-3)});
    const double eta = fit.value(kEfficiencyName), phi = fit.value(kPhaseNoiseName);
    const double se_eta = std::hypot(fit.standard_error(kEfficiencyName), kReferenceSeEta);
    const double se_phi = std::hypot(fit.standard_error(kPhaseNoiseName), kReferenceSePhi);
    const bool ok = fit.converged && std::abs(eta - 0.92) <= 0.02 && std::abs(phi - 0.019) <= 0.004 &&
                    std::abs(eta - 0.92) <= 2.0 * se_eta && std::abs(phi - 0.019) <= 2.0 * se_phi;
    if (ok) ++passed;
    worst_eta = std::max(worst_eta, std::abs(eta - 0.92));
    worst_phi = std::max(worst_phi, std::abs(phi - 0.019));
    if (s == 0) {
      eta0 = eta;
      phi0 = phi;
      se_eta0 = fit.standard_error(kEfficiencyName);
      se_phi0 = fit.standard_error(kPhaseNoiseName);
    }
  }
  const double elapsed = seconds_since(t0);
  o.detail = fmt("seed 0: eta %.4f", eta0) + fmt(" (fit SE %.4f),", se_eta0) + fmt(" phi %.2f mrad", phi0 * 1e3) +
             fmt(" (fit SE %.2f mrad)", se_phi0 * 1e3);
  require(o, passed == seeds,
          std::to_string(passed) + "/" + std::to_string(seeds) + " seeds within +-0.02 / +-4 mrad and 2 combined SE" +
              fmt(" (worst |d eta| %.4f,", worst_eta) + fmt(" |d phi| %.2f mrad)", worst_phi * 1e3));
  require(o, elapsed < 30.0, fmt("runtime %.2f s (< 30)", elapsed));
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome loss_budget() {
  Outcome o;
  const double eta = total_efficiency({0.97, std::pow(0.999, 7), 0.99, 0.99});
  require(o, std::abs(eta - 0.9346) <= 0.0005, fmt("total efficiency %.5f (0.9346 +- 0.0005)", eta));
  return o;
}

// 5 -------------------------------------------------------------------------
Outcome cavity_numbers() {
  Outcome o;
  const auto c1550 = characterize(default_geometry(WavelengthBand::Fundamental1550));
  const auto c775 = characterize(default_geometry(WavelengthBand::Pump775));
  require(o, std::abs(c1550.fsr / 1e9 - 3.893) < 0.0005, fmt("FSR %.4f GHz", c1550.fsr / 1e9));
  require(o, std::abs(c1550.finesse - 58.0) <= 5.8, fmt("finesse(1550) %.2f", c1550.finesse));
  require(o, std::abs(c775.finesse - 200.0) <= 20.0, fmt("finesse(775) %.2f", c775.finesse));
  require(o, c1550.escape_efficiency >= 0.96 && c1550.escape_efficiency <= 0.98,
          fmt("escape efficiency %.4f", c1550.escape_efficiency));
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome headroom() {
  Outcome o;
  const auto best = max_detected_squeezing({5.12e-3, 66e6, 0.92, 0.0}, 5e6);
  require(o, best.variance_db < -10.0, fmt("max squeezing at 5 MHz %.2f dB (beyond 10 dB)", best.variance_db));
  const double db = db_from_ratio(quadrature_variance({5.12e-3, 66e6, 0.97, 0.0}, 0.999 * 5.12e-3, 0.0,
                                                      Quadrature::Squeezed));
  require(o, db < -15.0, fmt("eta 0.97 at 0.999 P_thr %.2f dB (beyond 15 dB)", db));
  return o;
}

// 7 -------------------------------------------------------------------------
Outcome allan_law() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto white = gen_polarization_noise(1e5, 1.0, 1.0, 0.0, Seed{2024});
  for (double& v : white.samples) v -= 1.0;
  const std::vector<std::size_t> m{1, 2, 5, 10, 20, 50, 100};
  const auto r = oadev(white, m);
  // Least-squares slope over tau in [1, 100] s.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : r.points) {
    const double x = std::log10(p.tau), y = std::log10(p.oadev);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(r.points.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  require(o, std::abs(slope + 0.5) <= 0.05, fmt("slope %.4f (-0.50 +- 0.05)", slope));
  require(o, std::abs(r.points[0].oadev - 1.0) <= 0.03, fmt("oadev(1 s) %.4f (1.00 +- 0.03)", r.points[0].oadev));

  const double d = 2.5e-4;
  TimeSeries ramp{1.0, {}};
  for (int i = 0; i < 10000; ++i) ramp.samples.push_back(d * i);
  double worst = 0.0;
  for (const auto& p : oadev(ramp, std::vector<std::size_t>{1, 3, 10, 100, 1000, 3333}).points)
    worst = std::max(worst, std::abs(p.oadev - d * p.tau / std::sqrt(2.0)) / (d * p.tau / std::sqrt(2.0)));
  require(o, worst <= 1e-9, fmt("ramp matches d tau/sqrt2 (max rel err %.1e)", worst));
  const double elapsed = seconds_since(t0);
  require(o, elapsed < 5.0, fmt("runtime %.2f s (< 5)", elapsed));
  return o;
}

// 8 -------------------------------------------------------------------------
Outcome psd_law() {
  Outcome o;
  auto white = gen_polarization_noise(65536.0, 1.0, 1.0, 0.0, Seed{77});
  for (double& v : white.samples) v -= 1.0;
  WelchOptions opts;
  opts.segment_length = 1024;
  opts.overlap_fraction = 0.5;
  opts.window = Window::Hann;
  const auto psd = welch_psd(white, opts);
  std::vector<double> levels;
  for (std::size_t k = 1; k + 1 < psd.size(); ++k) levels.push_back(psd[k].density);
  std::nth_element(levels.begin(), levels.begin() + levels.size() / 2, levels.end());
  const double median = levels[levels.size() / 2];
  // The periodogram of white noise is chi-square with 2K degrees of freedom per
  // bin; after Welch averaging the median sits within a percent of the mean.
  require(o, std::abs(median - 2.0) <= 0.2, fmt("median level %.4f (2.0 +- 10%%)", median));
  const double df = psd[1].frequency - psd[0].frequency;
  double integral = 0.0;
  for (const auto& p : psd) integral += p.density * df;
  double mean = 0.0, var = 0.0;
  for (double v : white.samples) mean += v;
  mean /= white.samples.size();
  for (double v : white.samples) var += (v - mean) * (v - mean);
  var /= white.samples.size();
  require(o, std::abs(integral - var) <= 0.02 * var, fmt("Parseval integral / variance %.4f", integral / var));
  return o;
}

// 9 -------------------------------------------------------------------------
Outcome spectrum_exclusions() {
  Outcome o;
  SpectrumAnalyzerConfig sa;
  sa.electronic_noise = ratio_from_db(-22.0);
  sa.spurs = default_spurs(15.0, 0.5e6);
  std::vector<double> grid;
  for (int i = 0; i <= 476; ++i) grid.push_back(1e6 + 0.25e6 * i);
  std::vector<SpectrumTrace> traces;
  std::uint64_t seed = 9000;
  for (double p : {1.0e-3, 2.5e-3, 3.5e-3}) {
    for (auto q : {Quadrature::Squeezed, Quadrature::Antisqueezed}) {
      auto t = gen_spectrum_trace(kNominal, p, grid, q, sa, Seed{seed++});
      for (auto& pt : t.points) pt.variance = correct_electronic_noise(pt.variance, sa.electronic_noise);
      traces.push_back(std::move(t));
    }
  }
  SpectraFitOptions opts;
  opts.threshold = ThresholdSpec::fixed(5.12e-3);
  const auto with = fit_spectra(traces, default_exclusion_bands(), opts);
  const auto without = fit_spectra(traces, {}, opts);
  const double bias_with = std::abs(with.value(kEfficiencyName) - 0.92);
  const double se_with = with.standard_error(kEfficiencyName);
  const double bias_without = std::abs(without.value(kEfficiencyName) - 0.92);
  require(o, with.converged && bias_with <= 2.0 * se_with,
          fmt("with bands |d eta| %.2e", bias_with) + fmt(" <= 2 SE (SE %.2e)", se_with));
  require(o, bias_without > bias_with, fmt("without bands |d eta| %.2e (strictly larger)", bias_without));
  return o;
}

// 10 ------------------------------------------------------------------------
Outcome property_suites() {
  Outcome o;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Numeric Jacobian against an independent Richardson-extrapolated forward stencil.
  std::vector<double> freqs;
  for (int i = 1; i <= 40; ++i) freqs.push_back(i * 3e6);
  double worst_jac = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double power = 1e-3 + 3e-3 * u(rng);
    ResidualFunction fn = [&](std::span<const double> p, std::vector<double>& r) {
      r.resize(freqs.size());
      const double x = std::sqrt(power / p[2]);
      for (std::size_t i = 0; i < freqs.size(); ++i)
        r[i] = 10.0 * std::log10(quadrature_variance_normalized(p[0], p[1], x, freqs[i] / p[3], Quadrature::Squeezed));
    };
    std::vector<double> p{0.5 + 0.45 * u(rng), 0.005 + 0.05 * u(rng), 5e-3 + 2e-3 * u(rng), 40e6 + 40e6 * u(rng)};
    const auto central = numeric_jacobian(fn, p, {}, freqs.size());
    std::vector<double> base, far, near;
    fn(p, base);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double h = 1e-5 * std::abs(p[j]);
      const double keep = p[j];
      p[j] = keep + h;
      fn(p, far);
      p[j] = keep + 0.5 * h;
      fn(p, near);
      p[j] = keep;
      std::vector<double> ref(freqs.size());
      double scale = 0.0;
      for (std::size_t i = 0; i < freqs.size(); ++i) {
        ref[i] = 2.0 * (near[i] - base[i]) / (0.5 * h) - (far[i] - base[i]) / h;
        scale = std::max(scale, std::abs(ref[i]));
      }
      for (std::size_t i = 0; i < freqs.size(); ++i)
        worst_jac = std::max(worst_jac, std::abs(central[i * p.size() + j] - ref[i]) / scale);
    }
  }
  require(o, worst_jac <= 1e-5, fmt("Jacobian max rel diff %.1e", worst_jac));

  double worst_product = 0.0, worst_identity = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const double power = 0.999 * 5e-3 * u(rng);
    const double f = 300e6 * u(rng);
    const OpoModelParams ideal{5e-3, 66e6, 1.0, 0.0};
    const double vm = quadrature_variance(ideal, power, f, Quadrature::Squeezed);
    const double vp = quadrature_variance(ideal, power, f, Quadrature::Antisqueezed);
    worst_product = std::max(worst_product, std::abs(vm * vp - 1.0));

    const double x = std::sqrt(power / 5e-3);
    const double ratio = (1.0 + x) / (1.0 - x);
    const double vp0 = quadrature_variance(ideal, power, 0.0, Quadrature::Antisqueezed);
    const double vm0 = quadrature_variance(ideal, power, 0.0, Quadrature::Squeezed);
    worst_identity = std::max({worst_identity, std::abs(vp0 - ratio * ratio) / (ratio * ratio),
                               std::abs(vm0 - 1.0 / (ratio * ratio))});
  }
  require(o, worst_product <= 1e-9, fmt("V+ V- = 1 at eta=1 (max err %.1e)", worst_product));
  require(o, worst_identity <= 1e-9, fmt("V+- = ((1+-x)/(1-+x))^+-2 (max err %.1e)", worst_identity));

  const std::vector<std::pair<std::string, std::vector<std::string>>> golden{
      {"sim_gain.csv", {"sim", "gain", "--seed", "7"}},
      {"sim_spectrum.csv",
       {"sim", "spectrum", "--seed", "7", "--power", "2.5mW", "--freq-min", "1MHz", "--freq-max", "10MHz",
        "--freq-step", "1MHz", "--floor", "-22dB", "--spurs", "default"}},
      {"sim_sweep.csv", {"sim", "sweep", "--seed", "7", "--power-max", "1mW"}},
      {"sim_polnoise.csv", {"sim", "polnoise", "--seed", "7", "--duration", "0.2s"}},
      {"model_eval.csv",
       {"model", "eval", "--power", "2.5mW", "--freq-min", "0Hz", "--freq-max", "100MHz", "--freq-step", "10MHz"}},
  };
  int identical = 0;
  for (const auto& [file, args] : golden) {
    const auto a = cli(args);
    const auto b = cli(args);
    std::string expected;
    try {
      expected = cli::read_file(std::string(SQZ_GOLDEN_DIR) + "/" + file);
    } catch (const std::exception&) {
    }
    if (a.code == 0 && a.out == b.out && a.out == expected) ++identical;
  }
  require(o, identical == static_cast<int>(golden.size()),
          std::to_string(identical) + "/" + std::to_string(golden.size()) + " golden files byte-identical over two runs");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"threshold fit", threshold_fit},
      {"operating point", operating_point},
      {"power-sweep fit", power_sweep_fit},
      {"loss budget", loss_budget},
      {"cavity numbers", cavity_numbers},
      {"squeezing headroom", headroom},
      {"Allan deviation law", allan_law},
      {"PSD law", psd_law},
      {"spectrum fit with exclusions", spectrum_exclusions},
      {"property suites", property_suites},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
