#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "api.hpp"
#include "csv.hpp"
#include "formats.hpp"
#include "manifest.hpp"
#include "units.hpp"

namespace sqz::cli {

namespace {

using ojson = nlohmann::ordered_json;

enum class Format { Default, Json, Csv };

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;
  bool json = false;
  bool csv = false;
  std::string out_path;
  std::string manifest_path;
  std::map<std::string, std::string> normalized;  // option name -> canonical value
  RunManifest manifest;

  Context(std::ostream& o, std::ostream& e) : out(o), err(e) {}

  Format format() const { return json ? Format::Json : csv ? Format::Csv : Format::Default; }

  void warn(const std::string& msg) const {
    if (!quiet) err << "warning: " << msg << "\n";
  }

  void add_input(const std::string& path) { manifest.input_files.push_back(path); }

  void write(const std::string& content) {
    if (out_path.empty()) {
      out << content;
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw DataError("cannot write '" + out_path + "'");
      f << content;
      if (!f) throw DataError("failed writing '" + out_path + "'");
      manifest.output_files.push_back(out_path);
      if (!quiet) err << "wrote " << out_path << "\n";
    }
    std::string mpath = manifest_path;
    if (mpath.empty() && !out_path.empty()) mpath = out_path + ".manifest.json";
    if (!mpath.empty()) {
      std::ofstream m(mpath, std::ios::binary);
      if (!m) throw DataError("cannot write '" + mpath + "'");
      m << manifest.to_json();
    }
  }

  void emit_table(const Table& t) { write(format() == Format::Json ? to_json(t) : to_csv(t)); }

  // Single-record results: JSON object by default, one-row CSV on request.
  void emit_record(const ojson& record) {
    if (format() != Format::Csv) return write(record.dump(2) + "\n");
    Table t;
    std::vector<Cell> row;
    for (const auto& [k, v] : record.items()) {
      t.columns.push_back(k);
      if (v.is_number_integer()) row.emplace_back(v.get<long long>());
      else if (v.is_number()) row.emplace_back(v.get<double>());
      else if (v.is_string()) row.emplace_back(v.get<std::string>());
      else row.emplace_back(v.dump());
    }
    t.rows.push_back(std::move(row));
    write(to_csv(t));
  }
};

ojson number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

// ---- option helpers ------------------------------------------------------

CLI::Option* quantity(Context& ctx, CLI::App* app, const std::string& flag, double& target, std::string unit,
                      const std::string& desc) {
  const std::string key = flag.substr(flag.find_first_not_of('-'));
  auto* opt = app->add_option_function<std::string>(
      flag,
      [&ctx, &target, unit, key](const std::string& s) {
        try {
          target = parse_quantity(s, unit);
        } catch (const std::invalid_argument& e) {
          throw CLI::ValidationError("--" + key, e.what());
        }
        ctx.normalized[key] = format_number(target);
      },
      desc);
  opt->default_str(format_number(target) + (unit.empty() ? "" : " " + unit));
  return opt;
}

CLI::Option* quantity_list(Context& ctx, CLI::App* app, const std::string& flag, std::vector<double>& target,
                           std::string unit, const std::string& desc) {
  const std::string key = flag.substr(flag.find_first_not_of('-'));
  return app->add_option_function<std::vector<std::string>>(
      flag,
      [&ctx, &target, unit, key](const std::vector<std::string>& values) {
        target.clear();
        std::string canon;
        for (const auto& s : values) {
          try {
            target.push_back(parse_quantity(s, unit));
          } catch (const std::invalid_argument& e) {
            throw CLI::ValidationError("--" + key, e.what());
          }
          canon += (canon.empty() ? "" : ",") + format_number(target.back());
        }
        ctx.normalized[key] = canon;
      },
      desc);
}

CLI::Option* ratio_option(Context& ctx, CLI::App* app, const std::string& flag, double& target,
                          const std::string& desc) {
  const std::string key = flag.substr(flag.find_first_not_of('-'));
  auto* opt = app->add_option_function<std::string>(
      flag,
      [&ctx, &target, key](const std::string& s) {
        try {
          target = parse_ratio_or_db(s);
        } catch (const std::invalid_argument& e) {
          throw CLI::ValidationError("--" + key, e.what());
        }
        ctx.normalized[key] = format_number(target);
      },
      desc);
  opt->default_str(format_number(target));
  return opt;
}

struct ModelOptions {
  sqz_opo_params params{5.12e-3, 66e6, 0.92, 0.019};
};

void add_model_options(Context& ctx, CLI::App* app, ModelOptions& m) {
  quantity(ctx, app, "--pthr", m.params.threshold_power, "W", "threshold pump power");
  quantity(ctx, app, "--kappa", m.params.fwhm_bandwidth, "Hz", "cavity FWHM bandwidth");
  quantity(ctx, app, "--eta", m.params.total_efficiency, "", "total detection efficiency");
  quantity(ctx, app, "--phi", m.params.phase_noise_rms, "rad", "RMS phase noise");
}

struct Grid {
  std::vector<double> values;
  double min = 0.0, max = 0.0, step = 0.0;
};

void add_grid(Context& ctx, CLI::App* app, Grid& g, const std::string& name, const std::string& unit,
              const std::string& what) {
  auto* list = quantity_list(ctx, app, "--" + name, g.values, unit, what + " (repeatable)");
  auto* lo = quantity(ctx, app, "--" + name + "-min", g.min, unit, "grid start");
  auto* hi = quantity(ctx, app, "--" + name + "-max", g.max, unit, "grid end (inclusive)");
  auto* st = quantity(ctx, app, "--" + name + "-step", g.step, unit, "grid step");
  list->excludes(lo)->excludes(hi)->excludes(st);
}

std::vector<double> expand(const Grid& g, const std::string& name) {
  if (!g.values.empty()) return g.values;
  if (!(g.step > 0.0) || !(g.max >= g.min))
    throw CLI::ValidationError("--" + name, "give --" + name + " values or a grid with min <= max and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((g.max - g.min) / g.step + 1e-9)) + 1;
  if (n > 10'000'000) throw CLI::ValidationError("--" + name, "grid has too many points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = g.min + static_cast<double>(i) * g.step;
  return out;
}

struct AnalyzerOptions {
  double rbw = 300e3;
  double vbw = 300.0;
  std::string averages = "100";
  double floor = 0.0;
  std::string spurs = "none";
  double spur_height = 15.0;
  double spur_width = 1e6;
  std::vector<sqz_spur> spur_list;

  sqz_analyzer_config config() {
    double avg = 0.0;
    if (averages == "inf") {
      avg = std::numeric_limits<double>::infinity();
    } else {
      try {
        avg = parse_quantity(averages, "");
      } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--averages", e.what());
      }
    }
    spur_list.clear();
    if (spurs == "default")
      for (double f : {40e6, 80e6, 100e6}) spur_list.push_back({f, spur_height, spur_width});
    return {rbw, vbw, avg, floor, spur_list.data(), spur_list.size()};
  }
};

void add_analyzer_options(Context& ctx, CLI::App* app, AnalyzerOptions& a) {
  quantity(ctx, app, "--rbw", a.rbw, "Hz", "resolution bandwidth");
  quantity(ctx, app, "--vbw", a.vbw, "Hz", "video bandwidth");
  app->add_option("--averages", a.averages, "trace averages ('inf' disables noise)")->capture_default_str();
  ratio_option(ctx, app, "--floor", a.floor, "electronic noise floor, linear or e.g. -22dB");
  app->add_option("--spurs", a.spurs, "spur set")->check(CLI::IsMember({"none", "default"}))->capture_default_str();
  quantity(ctx, app, "--spur-height", a.spur_height, "", "spur height in dB");
  quantity(ctx, app, "--spur-width", a.spur_width, "Hz", "spur Gaussian width");
}

ojson fit_json(const sqz_fit_result* fit) {
  const std::size_t n = sqz_fit_num_params(fit);
  ojson j;
  ojson names = ojson::array(), params = ojson::object(), errors = ojson::object(), cov = ojson::array();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = sqz_fit_param_name(fit, i);
    names.push_back(name);
    params[name] = number_json(sqz_fit_value(fit, i));
    errors[name] = number_json(sqz_fit_std_error(fit, i));
    for (std::size_t k = 0; k < n; ++k) cov.push_back(number_json(sqz_fit_covariance(fit, i, k)));
  }
  j["parameter_names"] = names;
  j["params"] = params;
  j["std_errors"] = errors;
  j["covariance"] = cov;
  j["rss"] = number_json(sqz_fit_rss(fit));
  j["dof"] = sqz_fit_dof(fit);
  j["converged"] = sqz_fit_converged(fit) != 0;
  j["iterations"] = sqz_fit_iterations(fit);
  j["condition_number"] = number_json(sqz_fit_condition_number(fit));
  j["message"] = sqz_fit_message(fit);
  ojson warnings = ojson::array();
  for (std::size_t i = 0; i < sqz_fit_num_warnings(fit); ++i) warnings.push_back(sqz_fit_warning(fit, i));
  j["warnings"] = warnings;
  return j;
}

void emit_fit(Context& ctx, const sqz_fit_result* fit) {
  for (std::size_t i = 0; i < sqz_fit_num_warnings(fit); ++i) ctx.warn(sqz_fit_warning(fit, i));
  if (!sqz_fit_converged(fit)) ctx.warn(std::string("fit did not converge: ") + sqz_fit_message(fit));
  if (ctx.format() == Format::Csv) {
    Table t;
    t.columns = {"parameter", "value", "std_error"};
    for (std::size_t i = 0; i < sqz_fit_num_params(fit); ++i)
      t.rows.push_back({std::string(sqz_fit_param_name(fit, i)), sqz_fit_value(fit, i), sqz_fit_std_error(fit, i)});
    ctx.write(to_csv(t));
    return;
  }
  ctx.write(fit_json(fit).dump(2) + "\n");
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--exclude", "expected LOW:HIGH, got '" + text + "'");
  try {
    const double lo = parse_quantity(text.substr(0, colon), "Hz");
    const double hi = parse_quantity(text.substr(colon + 1), "Hz");
    if (!(lo < hi)) throw std::invalid_argument("band '" + text + "' needs LOW < HIGH");
    return {lo, hi};
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("--exclude", e.what());
  }
}

std::string fixed(double v, int digits, bool sign = false) {
  char buf[64];
  std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", digits, v);
  return buf;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx(out, err);
  CLI::App app{"Squeezed-light OPO toolkit: cavity and squeezing models, parameter fits, noise analysis and "
               "synthetic data."};
  app.name("sqz");
  app.set_version_flag("--version", std::string(sqz_version()));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-q,--quiet", ctx.quiet, "suppress warnings and progress messages");
  auto* json_flag = app.add_flag("--json", ctx.json, "emit JSON");
  auto* csv_flag = app.add_flag("--csv", ctx.csv, "emit CSV");
  json_flag->excludes(csv_flag);
  app.add_option("-o,--out", ctx.out_path, "output file (default: stdout); a manifest is written beside it");
  app.add_option("--manifest", ctx.manifest_path, "write the run manifest to this path");

  std::function<void()> action;

  // ---- cavity --------------------------------------------------------------
  std::string geometry_file, band_text = "1550";
  sqz_cavity_geometry geom{};
  std::set<std::string> geom_set;
  auto* cavity = app.add_subcommand("cavity", "cavity FSR, finesse, linewidth and escape efficiency");
  cavity->add_option("--geometry", geometry_file, "JSON geometry file")->check(CLI::ExistingFile);
  cavity->add_option("--band", band_text, "coating preset")->check(CLI::IsMember({"1550", "775"}))->capture_default_str();
  double length = 0, r_out = 0, r_back = 0, loss = 0;
  quantity(ctx, cavity, "--length", length, "m", "round-trip length");
  quantity(ctx, cavity, "--r-out", r_out, "", "output coupler reflectivity");
  quantity(ctx, cavity, "--r-back", r_back, "", "back mirror reflectivity");
  quantity(ctx, cavity, "--loss", loss, "", "intracavity loss per pass");
  cavity->callback([&] {
    action = [&] {
      check(sqz_default_geometry(band_text == "775" ? SQZ_BAND_775 : SQZ_BAND_1550, &geom));
      if (!geometry_file.empty()) {
        ctx.add_input(geometry_file);
        ojson j;
        try {
          j = ojson::parse(read_file(geometry_file));
          if (j.contains("band")) {
            const auto b = j.at("band").get<std::string>();
            if (b != "1550" && b != "775") throw DataError("band must be \"1550\" or \"775\"");
            check(sqz_default_geometry(b == "775" ? SQZ_BAND_775 : SQZ_BAND_1550, &geom));
          }
          if (j.contains("round_trip_length_m")) geom.round_trip_length = j.at("round_trip_length_m").get<double>();
          if (j.contains("output_coupler_reflectivity"))
            geom.output_coupler_reflectivity = j.at("output_coupler_reflectivity").get<double>();
          if (j.contains("back_mirror_reflectivity"))
            geom.back_mirror_reflectivity = j.at("back_mirror_reflectivity").get<double>();
          if (j.contains("per_pass_loss")) geom.per_pass_loss = j.at("per_pass_loss").get<double>();
        } catch (const nlohmann::json::exception& e) {
          throw DataError(geometry_file + ": " + e.what());
        } catch (const DataError& e) {
          throw DataError(geometry_file + ": " + e.what());
        }
      }
      if (cavity->count("--length")) geom.round_trip_length = length;
      if (cavity->count("--r-out")) geom.output_coupler_reflectivity = r_out;
      if (cavity->count("--r-back")) geom.back_mirror_reflectivity = r_back;
      if (cavity->count("--loss")) geom.per_pass_loss = loss;
      sqz_cavity_character c{};
      check(sqz_cavity_characterize(&geom, &c));
      ojson r;
      r["band"] = geom.band == SQZ_BAND_775 ? "775" : "1550";
      r["round_trip_length_m"] = geom.round_trip_length;
      r["output_coupler_reflectivity"] = geom.output_coupler_reflectivity;
      r["back_mirror_reflectivity"] = geom.back_mirror_reflectivity;
      r["per_pass_loss"] = geom.per_pass_loss;
      r["fsr_hz"] = c.fsr;
      r["finesse"] = c.finesse;
      r["fwhm_hz"] = c.fwhm;
      r["escape_efficiency"] = c.escape_efficiency;
      ctx.emit_record(r);
    };
  });

  // ---- efficiency ----------------------------------------------------------
  sqz_loss_budget budget{1.0, 1.0, 1.0, 1.0};
  double element_eff = 1.0;
  int elements = 0;
  auto* eff = app.add_subcommand("efficiency", "total detection efficiency from a loss budget");
  quantity(ctx, eff, "--escape", budget.escape_efficiency, "", "cavity escape efficiency");
  quantity(ctx, eff, "--optical", budget.optical_path_efficiency, "", "optical path efficiency");
  quantity(ctx, eff, "--element-efficiency", element_eff, "", "transmission of each extra optical element");
  eff->add_option("--elements", elements, "number of extra optical elements")->check(CLI::NonNegativeNumber);
  quantity(ctx, eff, "--visibility", budget.visibility, "", "homodyne fringe visibility");
  quantity(ctx, eff, "--qe", budget.quantum_efficiency, "", "photodiode quantum efficiency");
  eff->callback([&] {
    action = [&] {
      sqz_loss_budget b = budget;
      b.optical_path_efficiency *= std::pow(element_eff, elements);
      double total = 0.0;
      check(sqz_total_efficiency(&b, &total));
      ojson r;
      r["escape_efficiency"] = b.escape_efficiency;
      r["optical_path_efficiency"] = b.optical_path_efficiency;
      r["visibility"] = b.visibility;
      r["quantum_efficiency"] = b.quantum_efficiency;
      r["total_efficiency"] = total;
      ctx.emit_record(r);
    };
  });

  // ---- model ---------------------------------------------------------------
  auto* model = app.add_subcommand("model", "evaluate the gain and squeezing models");
  model->require_subcommand(1);

  ModelOptions eval_model;
  Grid eval_freq;
  double eval_power = 0.0;
  std::string eval_quad = "both";
  auto* eval = model->add_subcommand("eval", "quadrature variance spectra");
  add_model_options(ctx, eval, eval_model);
  quantity(ctx, eval, "--power", eval_power, "W", "pump power")->required();
  add_grid(ctx, eval, eval_freq, "freq", "Hz", "sideband frequency");
  eval->add_option("--quadrature", eval_quad, "quadrature")
      ->check(CLI::IsMember({"both", "squeezed", "antisqueezed"}))
      ->capture_default_str();
  eval->callback([&] {
    action = [&] {
      const auto freqs = expand(eval_freq, "freq");
      double v = 0.0;
      int warn = 0;
      check(sqz_quadrature_variance(&eval_model.params, eval_power, freqs.front(), SQZ_SQUEEZED, &v, &warn));
      if (warn) ctx.warn("phase noise is beyond the small-angle validity limit of the model");
      if (eval_quad != "both") {
        const sqz_quadrature q = parse_quadrature(eval_quad);
        sqz_trace* raw = nullptr;
        check(sqz_model_spectrum(&eval_model.params, eval_power, freqs.data(), freqs.size(), q, &raw));
        TracePtr trace(raw);
        if (freqs.size() == 1 && ctx.format() == Format::Default) {
          double f = 0.0, var = 0.0;
          check(sqz_trace_point(trace.get(), 0, &f, &var));
          double db = 0.0;
          check(sqz_db_from_ratio(var, &db));
          ctx.write(std::string(quadrature_name(q)) + ": " + fixed(db, 2, true) + " dB\n");
          return;
        }
        ctx.emit_table(trace_table(trace.get()));
        return;
      }
      Table t;
      t.metadata.emplace_back("pump_power_w", format_number(eval_power));
      t.columns = {"frequency_hz", "squeezed_db", "antisqueezed_db"};
      for (double f : freqs) {
        double vm = 0.0, vp = 0.0, dm = 0.0, dp = 0.0;
        check(sqz_quadrature_variance(&eval_model.params, eval_power, f, SQZ_SQUEEZED, &vm, nullptr));
        check(sqz_quadrature_variance(&eval_model.params, eval_power, f, SQZ_ANTISQUEEZED, &vp, nullptr));
        check(sqz_db_from_ratio(vm, &dm));
        check(sqz_db_from_ratio(vp, &dp));
        t.rows.push_back({f, dm, dp});
      }
      if (freqs.size() == 1 && ctx.format() == Format::Default) {
        const double dm = std::get<double>(t.rows[0][1]), dp = std::get<double>(t.rows[0][2]);
        ctx.write("squeezed: " + fixed(dm, 2, true) + " dB\nantisqueezed: " + fixed(dp, 2, true) + " dB\n");
        return;
      }
      ctx.emit_table(t);
    };
  });

  double gain_pthr = 5.12e-3;
  Grid gain_powers;
  auto* mgain = model->add_subcommand("gain", "classical parametric gain");
  quantity(ctx, mgain, "--pthr", gain_pthr, "W", "threshold pump power");
  add_grid(ctx, mgain, gain_powers, "power", "W", "pump power");
  mgain->callback([&] {
    action = [&] {
      const auto powers = expand(gain_powers, "power");
      Table t;
      t.columns = {"pump_power_w", "gain"};
      for (double p : powers) {
        double g = 0.0;
        check(sqz_parametric_gain(p, gain_pthr, &g));
        t.rows.push_back({p, g});
      }
      if (powers.size() == 1 && ctx.format() == Format::Default) {
        ctx.write("gain: " + fixed(std::get<double>(t.rows[0][1]), 4) + "\n");
        return;
      }
      ctx.emit_table(t);
    };
  });

  ModelOptions best_model;
  double best_freq = 0.0;
  auto* best = model->add_subcommand("max-squeezing", "pump power giving the strongest detected squeezing");
  add_model_options(ctx, best, best_model);
  quantity(ctx, best, "--freq", best_freq, "Hz", "sideband frequency");
  best->callback([&] {
    action = [&] {
      double p = 0.0, db = 0.0;
      check(sqz_max_detected_squeezing(&best_model.params, best_freq, &p, &db));
      ojson r;
      r["sideband_frequency_hz"] = best_freq;
      r["pump_power_w"] = p;
      r["pump_fraction_of_threshold"] = p / best_model.params.threshold_power;
      r["variance_db_rel_shot"] = db;
      ctx.emit_record(r);
    };
  });

  // ---- fit -----------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "parameter estimation");
  fit->require_subcommand(1);

  std::string fit_gain_in;
  double fit_gain_init = 0.0;
  auto* fgain = fit->add_subcommand("gain", "threshold power from a gain curve");
  fgain->add_option("-i,--in", fit_gain_in, "gain CSV (pump_power_w,gain,power_frac_err)")
      ->required()
      ->check(CLI::ExistingFile);
  quantity(ctx, fgain, "--pthr-initial", fit_gain_init, "W", "starting threshold (0: automatic)");
  fgain->callback([&] {
    action = [&] {
      ctx.add_input(fit_gain_in);
      const auto pts = read_gain(read_csv(fit_gain_in));
      sqz_fit_result* raw = nullptr;
      check(sqz_fit_gain(pts.data(), pts.size(), fit_gain_init, &raw));
      FitPtr result(raw);
      emit_fit(ctx, result.get());
    };
  });

  std::string sweep_in;
  double sweep_freq = 5e6, sweep_kappa = 66e6, sweep_pthr = 5.12e-3;
  bool sweep_fit_pthr = false;
  auto* fsweep = fit->add_subcommand("sweep", "efficiency and phase noise from a pump-power sweep");
  fsweep->add_option("-i,--in", sweep_in, "sweep CSV (pump_power_w,quadrature,variance_db_rel_shot)")
      ->required()
      ->check(CLI::ExistingFile);
  quantity(ctx, fsweep, "--freq", sweep_freq, "Hz", "sideband frequency of the sweep");
  quantity(ctx, fsweep, "--kappa", sweep_kappa, "Hz", "cavity FWHM bandwidth");
  quantity(ctx, fsweep, "--pthr", sweep_pthr, "W", "threshold (fixed, or the starting value with --fit-pthr)");
  fsweep->add_flag("--fit-pthr", sweep_fit_pthr, "fit the threshold as well");
  fsweep->callback([&] {
    action = [&] {
      ctx.add_input(sweep_in);
      const auto data = read_sweep(read_csv(sweep_in));
      sqz_fit_result* raw = nullptr;
      check(sqz_fit_power_sweep(data.squeezed.data(), data.squeezed.size(), data.antisqueezed.data(),
                                data.antisqueezed.size(), sweep_freq, sweep_kappa,
                                {sweep_fit_pthr ? 1 : 0, sweep_pthr}, &raw));
      FitPtr result(raw);
      emit_fit(ctx, result.get());
    };
  });

  std::vector<std::string> spectra_in, exclude_text;
  bool no_exclude = false, spectra_fit_pthr = false, per_trace_phi = false;
  double spectra_pthr = 5.12e-3, kappa_initial = 0.0, band_half_width = 2e6;
  auto* fspectra = fit->add_subcommand("spectra", "joint fit of squeezing spectra");
  fspectra->add_option("-i,--in", spectra_in, "spectrum CSV files (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* exclude_opt =
      fspectra->add_option("--exclude", exclude_text, "exclusion band LOW:HIGH, e.g. 38MHz:42MHz (repeatable)");
  auto* no_exclude_opt = fspectra->add_flag("--no-exclude", no_exclude, "fit every point (no exclusion bands)");
  exclude_opt->excludes(no_exclude_opt);
  quantity(ctx, fspectra, "--band-half-width", band_half_width, "Hz", "half-width of the default bands");
  quantity(ctx, fspectra, "--pthr", spectra_pthr, "W", "threshold (fixed, or the starting value with --fit-pthr)");
  fspectra->add_flag("--fit-pthr", spectra_fit_pthr, "fit the threshold as well");
  fspectra->add_flag("--per-trace-phi", per_trace_phi, "one phase-noise parameter per trace");
  quantity(ctx, fspectra, "--kappa-initial", kappa_initial, "Hz", "starting bandwidth (0: from the data)");
  fspectra->callback([&] {
    action = [&] {
      std::vector<TracePtr> traces;
      std::vector<const sqz_trace*> handles;
      for (const auto& path : spectra_in) {
        ctx.add_input(path);
        traces.push_back(read_trace(read_csv(path)));
        handles.push_back(traces.back().get());
      }
      std::vector<sqz_band_interval> bands;
      if (!exclude_text.empty()) {
        for (const auto& b : exclude_text) {
          const auto [lo, hi] = parse_band(b);
          bands.push_back({lo, hi});
        }
      } else if (!no_exclude) {
        bands.resize(3);
        std::size_t n = 0;
        check(sqz_default_exclusion_bands(band_half_width, bands.data(), bands.size(), &n));
        bands.resize(n);
      }
      const sqz_spectra_options opts{{spectra_fit_pthr ? 1 : 0, spectra_pthr}, per_trace_phi ? 1 : 0, kappa_initial};
      sqz_fit_result* raw = nullptr;
      check(sqz_fit_spectra(handles.data(), handles.size(), bands.data(), bands.size(), &opts, &raw));
      FitPtr result(raw);
      emit_fit(ctx, result.get());
    };
  });

  // ---- sim -----------------------------------------------------------------
  auto* sim = app.add_subcommand("sim", "seeded synthetic data");
  sim->require_subcommand(1);
  std::uint64_t seed = 1;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "random seed")->capture_default_str(); };

  double sg_pthr = 5.12e-3, sg_err = 0.05;
  Grid sg_powers{{}, 0.5e-3, 4.5e-3, 0.25e-3};
  auto* sgain = sim->add_subcommand("gain", "gain curve with jittered pump power");
  quantity(ctx, sgain, "--pthr", sg_pthr, "W", "threshold pump power");
  add_grid(ctx, sgain, sg_powers, "power", "W", "nominal pump power");
  quantity(ctx, sgain, "--power-error", sg_err, "", "fractional power error");
  add_seed(sgain);
  sgain->callback([&] {
    action = [&] {
      const auto powers = expand(sg_powers, "power");
      std::vector<sqz_gain_point> pts(powers.size());
      check(sqz_sim_gain(sg_pthr, powers.data(), powers.size(), sg_err, seed, pts.data()));
      ctx.emit_table(gain_table(pts));
    };
  });

  ModelOptions ss_model;
  double ss_power = 2.5e-3;
  std::string ss_quad = "squeezed";
  Grid ss_freq{{}, 1e6, 120e6, 0.5e6};
  AnalyzerOptions ss_sa;
  auto* sspec = sim->add_subcommand("spectrum", "spectrum-analyzer trace");
  add_model_options(ctx, sspec, ss_model);
  quantity(ctx, sspec, "--power", ss_power, "W", "pump power");
  sspec->add_option("--quadrature", ss_quad, "quadrature")
      ->check(CLI::IsMember({"squeezed", "antisqueezed"}))
      ->capture_default_str();
  add_grid(ctx, sspec, ss_freq, "freq", "Hz", "frequency");
  add_analyzer_options(ctx, sspec, ss_sa);
  add_seed(sspec);
  sspec->callback([&] {
    action = [&] {
      const auto freqs = expand(ss_freq, "freq");
      const auto cfg = ss_sa.config();
      sqz_trace* raw = nullptr;
      check(sqz_sim_spectrum(&ss_model.params, ss_power, freqs.data(), freqs.size(), parse_quadrature(ss_quad), &cfg,
                             seed, &raw));
      TracePtr trace(raw);
      ctx.emit_table(trace_table(trace.get()));
    };
  });

  ModelOptions sw_model;
  double sw_freq = 5e6;
  Grid sw_powers{{}, 0.25e-3, 4e-3, 0.25e-3};
  AnalyzerOptions sw_sa;
  auto* ssweep = sim->add_subcommand("sweep", "squeezed and antisqueezed levels versus pump power");
  add_model_options(ctx, ssweep, sw_model);
  quantity(ctx, ssweep, "--freq", sw_freq, "Hz", "sideband frequency");
  add_grid(ctx, ssweep, sw_powers, "power", "W", "pump power");
  add_analyzer_options(ctx, ssweep, sw_sa);
  add_seed(ssweep);
  ssweep->callback([&] {
    action = [&] {
      const auto powers = expand(sw_powers, "power");
      const auto cfg = sw_sa.config();
      SweepData data;
      for (std::size_t i = 0; i < powers.size(); ++i) {
        for (sqz_quadrature q : {SQZ_SQUEEZED, SQZ_ANTISQUEEZED}) {
          // Each (power, quadrature) point gets its own stream.
          const std::uint64_t s = seed + 2 * i + (q == SQZ_ANTISQUEEZED ? 1 : 0);
          sqz_trace* raw = nullptr;
          check(sqz_sim_spectrum(&sw_model.params, powers[i], &sw_freq, 1, q, &cfg, s, &raw));
          TracePtr trace(raw);
          double f = 0.0, v = 0.0;
          check(sqz_trace_point(trace.get(), 0, &f, &v));
          (q == SQZ_SQUEEZED ? data.squeezed : data.antisqueezed).push_back({powers[i], v});
        }
      }
      ctx.emit_table(sweep_table(data));
    };
  });

  double pn_duration = 100.0, pn_rate = 100.0, pn_white = 1e-3, pn_walk = 1e-5;
  auto* spol = sim->add_subcommand("polnoise", "power-meter time series (white plus random walk)");
  quantity(ctx, spol, "--duration", pn_duration, "s", "record length");
  quantity(ctx, spol, "--rate", pn_rate, "Hz", "sample rate");
  quantity(ctx, spol, "--white", pn_white, "", "white noise standard deviation");
  quantity(ctx, spol, "--walk", pn_walk, "", "random-walk step standard deviation");
  add_seed(spol);
  spol->callback([&] {
    action = [&] {
      sqz_series* raw = nullptr;
      check(sqz_sim_polarization_noise(pn_duration, pn_rate, pn_white, pn_walk, seed, &raw));
      SeriesPtr series(raw);
      ctx.emit_table(series_table(series.get()));
    };
  });

  // ---- noise analysis ------------------------------------------------------
  auto load_series = [&](const std::string& path, bool fractional) {
    ctx.add_input(path);
    SeriesPtr series = read_series(read_csv(path));
    if (!fractional) return series;
    sqz_series* raw = nullptr;
    if (sqz_normalize_fractional(series.get(), &raw) != SQZ_OK) throw DataError(path + ": " + sqz_last_error());
    return SeriesPtr(raw);
  };

  std::string adev_in;
  bool adev_fractional = false;
  std::vector<std::size_t> adev_factors;
  auto* adev = app.add_subcommand("adev", "overlapped Allan deviation");
  adev->add_option("-i,--in", adev_in, "time-series CSV")->required()->check(CLI::ExistingFile);
  adev->add_flag("--fractional", adev_fractional, "normalize to x/mean - 1 first");
  adev->add_option("--factors", adev_factors, "averaging factors (default 1-2-5 up to N/3)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  adev->callback([&] {
    action = [&] {
      SeriesPtr series = load_series(adev_in, adev_fractional);
      std::vector<std::size_t> factors = adev_factors;
      if (factors.empty()) {
        std::size_t n = 0;
        check(sqz_default_averaging_factors(sqz_series_size(series.get()), nullptr, 0, &n));
        factors.resize(n);
        check(sqz_default_averaging_factors(sqz_series_size(series.get()), factors.data(), n, &n));
      }
      std::vector<sqz_allan_point> pts(factors.size());
      std::size_t count = 0, omitted = 0;
      check(sqz_oadev(series.get(), factors.data(), factors.size(), pts.data(), pts.size(), &count, &omitted));
      if (omitted) ctx.warn(std::to_string(omitted) + " averaging factor(s) omitted: series too short (needs 2m+1)");
      Table t;
      t.columns = {"tau_s", "oadev", "num_terms"};
      for (std::size_t i = 0; i < count; ++i)
        t.rows.push_back({pts[i].tau, pts[i].oadev, static_cast<long long>(pts[i].num_terms)});
      ctx.emit_table(t);
    };
  });

  std::string psd_in, window = "hann";
  bool psd_fractional = false, no_detrend = false;
  std::size_t segment = 0;
  double overlap = 0.5;
  auto* psd = app.add_subcommand("psd", "one-sided Welch power spectral density");
  psd->add_option("-i,--in", psd_in, "time-series CSV")->required()->check(CLI::ExistingFile);
  psd->add_flag("--fractional", psd_fractional, "normalize to x/mean - 1 first");
  psd->add_option("--segment", segment, "segment length (0: N/8 rounded down to a power of two)")
      ->capture_default_str();
  quantity(ctx, psd, "--overlap", overlap, "", "segment overlap fraction");
  psd->add_option("--window", window, "window")->check(CLI::IsMember({"hann", "rectangular"}))->capture_default_str();
  psd->add_flag("--no-detrend", no_detrend, "keep each segment's mean");
  psd->callback([&] {
    action = [&] {
      SeriesPtr series = load_series(psd_in, psd_fractional);
      sqz_welch_options o = sqz_welch_default_options();
      o.segment_length = segment;
      o.overlap_fraction = overlap;
      o.window = window == "hann" ? SQZ_WINDOW_HANN : SQZ_WINDOW_RECTANGULAR;
      o.detrend_constant = no_detrend ? 0 : 1;
      std::vector<sqz_psd_point> pts(sqz_welch_num_bins(series.get(), &o));
      std::size_t count = 0;
      check(sqz_welch_psd(series.get(), &o, pts.data(), pts.size(), &count));
      Table t;
      t.columns = {"frequency_hz", "psd_per_hz"};
      for (std::size_t i = 0; i < count; ++i) t.rows.push_back({pts[i].frequency, pts[i].density});
      ctx.emit_table(t);
    };
  });

  // ---- correct-noise -------------------------------------------------------
  std::string cn_in;
  double cn_floor = 0.0;
  auto* cn = app.add_subcommand("correct-noise", "remove an electronic noise floor from a trace");
  cn->add_option("-i,--in", cn_in, "spectrum CSV")->required()->check(CLI::ExistingFile);
  ratio_option(ctx, cn, "--floor", cn_floor, "electronic noise floor, linear or e.g. -22dB")->required();
  cn->callback([&] {
    action = [&] {
      ctx.add_input(cn_in);
      const auto doc = read_csv(cn_in);
      TracePtr in = read_trace(doc);
      sqz_trace* raw = nullptr;
      check(sqz_trace_create(sqz_trace_pump_power(in.get()), sqz_trace_quadrature(in.get()), &raw));
      TracePtr corrected(raw);
      for (std::size_t i = 0; i < sqz_trace_size(in.get()); ++i) {
        double f = 0.0, v = 0.0, c = 0.0;
        check(sqz_trace_point(in.get(), i, &f, &v));
        if (sqz_correct_electronic_noise(v, cn_floor, &c) != SQZ_OK) doc.fail(i, sqz_last_error());
        check(sqz_trace_append(corrected.get(), f, c));
      }
      double rbw = NAN, vbw = NAN, avg = NAN;
      check(sqz_trace_get_metadata(in.get(), &rbw, &vbw, &avg));
      auto or_clear = [](double v) { return std::isnan(v) ? -1.0 : v; };
      check(sqz_trace_set_metadata(corrected.get(), or_clear(rbw), or_clear(vbw), or_clear(avg)));
      ctx.emit_table(trace_table(corrected.get(), {{"electronic_noise_removed", format_number(cn_floor)}}));
    };
  });

  // ---- dispatch ------------------------------------------------------------
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  // Leaf subcommand and its effective configuration.
  CLI::App* leaf = &app;
  std::string command;
  while (!leaf->get_subcommands().empty()) {
    leaf = leaf->get_subcommands().front();
    command += (command.empty() ? "" : " ") + leaf->get_name();
  }
  ctx.manifest.command = command;
  ctx.manifest.tool_version = sqz_version();
  static const std::set<std::string> skip{"help", "in", "seed"};
  for (const CLI::Option* opt : leaf->get_options()) {
    const std::string key = opt->get_single_name();
    if (skip.count(key) || opt->count() == 0) continue;
    const auto it = ctx.normalized.find(key);
    if (it != ctx.normalized.end()) {
      ctx.manifest.config[key] = it->second;
    } else {
      std::string joined;
      for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
      ctx.manifest.config[key] = joined;
    }
  }
  ctx.manifest.config["format"] = ctx.json ? "json" : ctx.csv ? "csv" : "default";
  if (leaf->get_option_no_throw("--seed") != nullptr) ctx.manifest.seed = seed;

  try {
    if (!action) throw DataError("no command selected");
    action();
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace sqz::cli
