#pragma once

#include <string_view>

namespace sqz {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact
inline constexpr double kPi = 3.14159265358979323846;

enum class WavelengthBand { Fundamental1550, Pump775 };

std::string_view to_string(WavelengthBand band);
WavelengthBand wavelength_band_from_string(std::string_view text);

/// Mirror and loss description of a two-mirror (hemilithic) cavity at one
/// wavelength. Reflectivities are power fractions.
struct CavityGeometry {
  double round_trip_length = 0.0;  ///< optical path in meters, index folded in
  double output_coupler_reflectivity = 0.0;
  double back_mirror_reflectivity = 0.0;
  double per_pass_loss = 0.0;  ///< crossed twice per round trip
  WavelengthBand band = WavelengthBand::Fundamental1550;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct CavityCharacter {
  double fsr = 0.0;      // Hz
  double finesse = 0.0;
  double fwhm = 0.0;     // Hz
  double escape_efficiency = 0.0;
};

/// Detection efficiency factors. Visibility enters the total squared.
struct LossBudget {
  double escape_efficiency = 1.0;
  double optical_path_efficiency = 1.0;
  double visibility = 1.0;
  double quantum_efficiency = 1.0;

  void validate() const;
};

double db_from_ratio(double ratio);
double ratio_from_db(double db);

double free_spectral_range(double round_trip_length);

/// High-finesse closed form pi*sqrt(rho)/(1-rho), where rho is the round-trip
/// amplitude factor sqrt(R_out*R_back)*(1-per_pass_loss).
double finesse(const CavityGeometry& geometry);

double escape_efficiency(double output_coupler_transmission, double round_trip_loss);

/// Round-trip loss other than output coupling: back mirror leak plus two
/// passes through the intracavity loss.
double intracavity_round_trip_loss(const CavityGeometry& geometry);

CavityCharacter characterize(const CavityGeometry& geometry);

double total_efficiency(const LossBudget& budget);

/// Coating values of the compact 77 mm double-resonant source. The 1550 nm
/// mode includes the 0.1% AR loss per pass; the 775 nm mode is lossless.
CavityGeometry default_geometry(WavelengthBand band);

}  // namespace sqz
