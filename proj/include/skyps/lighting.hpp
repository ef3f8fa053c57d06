#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "skyps/types.hpp"

// World frame: x = East, y = North, z = up.
namespace skyps {

/// Per-pixel solid angles of a full-sphere equirectangular grid.
/// Rows span zenith angle [0, pi] top to bottom and every pixel of a row
/// covers (2pi / width) * (cos(theta_top) - cos(theta_bottom)) steradians.
Grid<double> compute_solid_angles(int width, int height);

/// Equirectangular HDR environment map. Immutable after construction.
///
/// Pixel (x, y) is centred on zenith angle theta = (y + 0.5) * pi / height and
/// compass azimuth phi = (x + 0.5) * 2pi / width, measured from North towards
/// East, so its direction is (sin(theta) sin(phi), sin(theta) cos(phi), cos(theta)).
class EnvironmentMap {
 public:
  EnvironmentMap(int width, int height, std::vector<Rgb> radiance);
  /// Uniform map.
  EnvironmentMap(int width, int height, const Rgb& value);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return radiance_.size(); }

  const Rgb& radiance(int x, int y) const { return radiance_[index(x, y)]; }
  const Rgb& radiance(std::size_t i) const { return radiance_[i]; }
  const std::vector<Rgb>& radiance() const { return radiance_; }
  double solid_angle(int y) const { return row_solid_angle_[static_cast<std::size_t>(y)]; }
  double solid_angle_at(std::size_t i) const { return row_solid_angle_[i / static_cast<std::size_t>(width_)]; }
  const Vec3& direction(std::size_t i) const { return direction_[i]; }
  const Vec3& direction(int x, int y) const { return direction_[index(x, y)]; }

  /// Radiance times solid angle, per channel and as luminance.
  const Rgb& weighted_radiance(std::size_t i) const { return weighted_rgb_[i]; }
  double weighted_luminance(std::size_t i) const { return weighted_lum_[i]; }

  /// Luminance of the brightest pixel.
  double max_luminance() const;

  EnvironmentMap scaled(double factor) const;
  EnvironmentMap operator+(const EnvironmentMap& other) const;
  /// Azimuthal rotation by a whole number of columns (positive turns towards East).
  EnvironmentMap rotated_columns(int columns) const;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_;
  int height_;
  std::vector<Rgb> radiance_;
  std::vector<double> row_solid_angle_;
  std::vector<Vec3> direction_;
  std::vector<Rgb> weighted_rgb_;
  std::vector<double> weighted_lum_;
};

/// Pixel containing a direction.
std::pair<int, int> pixel_of(const Vec3& direction, int width, int height);
/// Unit direction for a zenith angle and compass azimuth (radians).
Vec3 direction_from_angles(double zenith, double azimuth);

struct GeoTemporal {
  double latitude_deg = 46.8;
  double longitude_deg = -71.2;
  std::chrono::year_month_day date{std::chrono::year{2014}, std::chrono::month{9}, std::chrono::day{23}};
  std::vector<double> timestamps = default_timestamps();  // solar hours

  /// 9:00 .. 16:00 hourly.
  static std::vector<double> default_timestamps();
  void validate() const;
};

/// Parses YYYY-MM-DD.
std::chrono::year_month_day parse_date(std::string_view text);
std::string format_date(const std::chrono::year_month_day& date);

/// Unit sun direction at a solar time (hours, 12 = solar noon).
/// Declination follows the NOAA Fourier-series formulation; the hour angle
/// comes straight from the solar time, so longitude plays no role.
Vec3 sun_position(const GeoTemporal& geo, double solar_hours);

/// Compass azimuth (degrees from North towards East) and elevation of a direction.
double azimuth_deg(const Vec3& d);
double elevation_deg(const Vec3& d);

/// Solar-disc radiance that makes a fully visible disc of the default radius
/// produce a unit mean light vector at normal incidence.
double default_sun_radiance_scale();

struct SkyParams {
  double turbidity = 2.0;
  double ground_albedo = 0.3;
  double sun_disc_radius_deg = 0.2665;
  double sun_radiance_scale = default_sun_radiance_scale();

  void validate() const;
};

/// Clear sky from the Preetham analytic model plus an explicit solar disc.
/// The disc carries sun_radiance_scale * sun_attenuation radiance over its solid
/// angle; when it is narrower than a pixel its energy lands in the pixel that
/// contains the sun. The lower hemisphere is a constant ground term
/// ground_albedo * E / pi, E being the horizontal irradiance from sky and sun.
EnvironmentMap render_sky(const Vec3& sun_dir, const SkyParams& params, int width, int height,
                          double sun_attenuation = 1.0);

/// True iff the brightest pixel's luminance exceeds 20% of the reference.
bool sun_visible(const EnvironmentMap& env, double reference_sun_intensity);

/// Fraction of maps with a visible sun. Without a reference the brightest pixel
/// of the sequence is used, which makes a fully overcast day look clear; pass
/// clear_sun_reference() when the day's clear-sky peak is known.
double day_visibility_fraction(std::span<const EnvironmentMap> envs,
                               std::optional<double> reference_sun_intensity = std::nullopt);

enum class DayClass { Overcast, MixedOvercast, MixedClear, Clear };

DayClass classify_day(double fraction);
std::string_view to_string(DayClass c);

/// One render_sky per timestamp with the disc scaled by the matching attenuation.
std::vector<EnvironmentMap> simulate_cloud_sequence(const GeoTemporal& geo, const SkyParams& params,
                                                    std::span<const double> attenuation, int width,
                                                    int height);

/// Clear-day sequence (all attenuations 1). Timestamps with the sun below the
/// horizon come out as all-black maps.
std::vector<EnvironmentMap> render_day(const GeoTemporal& geo, const SkyParams& params, int width, int height);

/// Brightest pixel luminance over the clear-day sequence of geo.
double clear_sun_reference(const GeoTemporal& geo, const SkyParams& params, int width, int height);

}  // namespace skyps
