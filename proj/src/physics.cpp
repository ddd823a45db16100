#include "sqz/physics.hpp"

#include <cmath>
#include <string>

#include "sqz/errors.hpp"

namespace sqz {

namespace {

bool is_fraction(double v) { return std::isfinite(v) && v >= 0.0 && v < 1.0; }

bool is_efficiency(double v) { return std::isfinite(v) && v > 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(WavelengthBand band) {
  return band == WavelengthBand::Fundamental1550 ? "1550" : "775";
}

WavelengthBand wavelength_band_from_string(std::string_view text) {
  if (text == "1550" || text == "fundamental_1550") return WavelengthBand::Fundamental1550;
  if (text == "775" || text == "pump_775") return WavelengthBand::Pump775;
  throw InvalidArgument("unknown wavelength band '" + std::string(text) + "'");
}

void CavityGeometry::validate() const {
  if (!(std::isfinite(round_trip_length) && round_trip_length > 0.0))
    throw InvalidArgument("round-trip length must be positive");
  if (!is_fraction(output_coupler_reflectivity))
    throw InvalidArgument("output coupler reflectivity must lie in [0, 1)");
  if (!is_fraction(back_mirror_reflectivity))
    throw InvalidArgument("back mirror reflectivity must lie in [0, 1)");
  if (!is_fraction(per_pass_loss)) throw InvalidArgument("per-pass loss must lie in [0, 1)");
}

void LossBudget::validate() const {
  if (!is_efficiency(escape_efficiency)) throw InvalidArgument("escape efficiency must lie in (0, 1]");
  if (!is_efficiency(optical_path_efficiency))
    throw InvalidArgument("optical path efficiency must lie in (0, 1]");
  if (!is_efficiency(visibility)) throw InvalidArgument("visibility must lie in (0, 1]");
  if (!is_efficiency(quantum_efficiency)) throw InvalidArgument("quantum efficiency must lie in (0, 1]");
}

double db_from_ratio(double ratio) {
  if (!(ratio > 0.0)) throw DomainError("decibel conversion needs a positive ratio");
  return 10.0 * std::log10(ratio);
}

double ratio_from_db(double db) { return std::pow(10.0, db / 10.0); }

double free_spectral_range(double round_trip_length) {
  if (!(round_trip_length > 0.0)) throw DomainError("round-trip length must be positive");
  return kSpeedOfLight / round_trip_length;
}

double finesse(const CavityGeometry& geometry) {
  geometry.validate();
  const double rho = std::sqrt(geometry.output_coupler_reflectivity * geometry.back_mirror_reflectivity) *
                     (1.0 - geometry.per_pass_loss);
  if (!(rho < 1.0)) throw DomainError("round-trip amplitude factor must be below 1");
  if (!(rho > 0.0)) throw DomainError("cavity has no round-trip feedback");
  return kPi * std::sqrt(rho) / (1.0 - rho);
}

double escape_efficiency(double output_coupler_transmission, double round_trip_loss) {
  if (!(output_coupler_transmission >= 0.0) || !(round_trip_loss >= 0.0))
    throw DomainError("transmission and loss must be non-negative");
  const double sum = output_coupler_transmission + round_trip_loss;
  if (!(sum > 0.0)) throw DomainError("transmission plus loss must be positive");
  return output_coupler_transmission / sum;
}

double intracavity_round_trip_loss(const CavityGeometry& geometry) {
  return (1.0 - geometry.back_mirror_reflectivity) + 2.0 * geometry.per_pass_loss;
}

CavityCharacter characterize(const CavityGeometry& geometry) {
  CavityCharacter out;
  out.fsr = free_spectral_range(geometry.round_trip_length);
  out.finesse = finesse(geometry);
  out.fwhm = out.fsr / out.finesse;
  out.escape_efficiency =
      escape_efficiency(1.0 - geometry.output_coupler_reflectivity, intracavity_round_trip_loss(geometry));
  return out;
}

double total_efficiency(const LossBudget& budget) {
  budget.validate();
  return budget.escape_efficiency * budget.optical_path_efficiency * budget.visibility * budget.visibility *
         budget.quantum_efficiency;
}

CavityGeometry default_geometry(WavelengthBand band) {
  CavityGeometry g;
  g.round_trip_length = 0.077;
  g.band = band;
  if (band == WavelengthBand::Fundamental1550) {
    g.output_coupler_reflectivity = 0.90;
    g.back_mirror_reflectivity = 0.9995;
    g.per_pass_loss = 0.001;
  } else {
    g.output_coupler_reflectivity = 0.975;
    g.back_mirror_reflectivity = 0.995;
    g.per_pass_loss = 0.0;
  }
  return g;
}

}  // namespace sqz
