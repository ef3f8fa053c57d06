#include "skyps/lighting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace skyps {

Grid<double> compute_solid_angles(int width, int height) {
  if (width < 2 || height < 2) throw InvalidArgument("solid angles need width, height >= 2");
  Grid<double> grid(width, height);
  const double dphi = 2.0 * kPi / width;
  for (int y = 0; y < height; ++y) {
    const double top = kPi * y / height;
    const double bottom = kPi * (y + 1) / height;
    const double w = dphi * (std::cos(top) - std::cos(bottom));
    for (int x = 0; x < width; ++x) grid(x, y) = w;
  }
  return grid;
}

Vec3 direction_from_angles(double zenith, double azimuth) {
  const double s = std::sin(zenith);
  return {s * std::sin(azimuth), s * std::cos(azimuth), std::cos(zenith)};
}

std::pair<int, int> pixel_of(const Vec3& d, int width, int height) {
  const Vec3 u = d.normalized();
  const double theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
  double phi = std::atan2(u.x(), u.y());
  if (phi < 0.0) phi += 2.0 * kPi;
  const int y = std::clamp(static_cast<int>(theta / kPi * height), 0, height - 1);
  const int x = std::clamp(static_cast<int>(phi / (2.0 * kPi) * width), 0, width - 1);
  return {x, y};
}

EnvironmentMap::EnvironmentMap(int width, int height, std::vector<Rgb> radiance)
    : width_(width), height_(height), radiance_(std::move(radiance)) {
  if (width < 2 || height < 2) throw InvalidArgument("environment map needs width, height >= 2");
  if (radiance_.size() != static_cast<std::size_t>(width) * height)
    throw InvalidArgument("environment map radiance size mismatch");
  for (const Rgb& c : radiance_)
    if (!c.isFinite().all() || (c < 0.0).any())
      throw InvalidArgument("environment map radiance must be finite and nonnegative");

  const Grid<double> sa = compute_solid_angles(width, height);
  row_solid_angle_.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) row_solid_angle_[static_cast<std::size_t>(y)] = sa(0, y);

  direction_.resize(radiance_.size());
  weighted_rgb_.resize(radiance_.size());
  weighted_lum_.resize(radiance_.size());
  for (int y = 0; y < height; ++y) {
    const double theta = (y + 0.5) * kPi / height;
    for (int x = 0; x < width; ++x) {
      const std::size_t i = index(x, y);
      direction_[i] = direction_from_angles(theta, (x + 0.5) * 2.0 * kPi / width);
      weighted_rgb_[i] = radiance_[i] * row_solid_angle_[static_cast<std::size_t>(y)];
      weighted_lum_[i] = luminance(weighted_rgb_[i]);
    }
  }
}

EnvironmentMap::EnvironmentMap(int width, int height, const Rgb& value)
    : EnvironmentMap(width, height,
                     std::vector<Rgb>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), value)) {}

double EnvironmentMap::max_luminance() const {
  double m = 0.0;
  for (const Rgb& c : radiance_) m = std::max(m, luminance(c));
  return m;
}

EnvironmentMap EnvironmentMap::scaled(double factor) const {
  if (!(factor >= 0.0)) throw InvalidArgument("scale factor must be nonnegative");
  std::vector<Rgb> r(radiance_);
  for (Rgb& c : r) c *= factor;
  return {width_, height_, std::move(r)};
}

EnvironmentMap EnvironmentMap::operator+(const EnvironmentMap& other) const {
  if (other.width_ != width_ || other.height_ != height_) throw InvalidArgument("environment map shape mismatch");
  std::vector<Rgb> r(radiance_);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += other.radiance_[i];
  return {width_, height_, std::move(r)};
}

EnvironmentMap EnvironmentMap::rotated_columns(int columns) const {
  std::vector<Rgb> r(radiance_.size());
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) {
      const int src = ((x - columns) % width_ + width_) % width_;
      r[index(x, y)] = radiance_[index(src, y)];
    }
  return {width_, height_, std::move(r)};
}

// ---------------------------------------------------------------------------
// Ephemeris

std::vector<double> GeoTemporal::default_timestamps() { return {9, 10, 11, 12, 13, 14, 15, 16}; }

void GeoTemporal::validate() const {
  if (!(std::abs(latitude_deg) <= 90.0)) throw InvalidArgument("latitude must be within [-90, 90]");
  if (!(std::abs(longitude_deg) <= 180.0)) throw InvalidArgument("longitude must be within [-180, 180]");
  if (!date.ok()) throw InvalidArgument("invalid calendar date");
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (!(timestamps[i] > timestamps[i - 1])) throw InvalidArgument("timestamps must be strictly increasing");
}

std::chrono::year_month_day parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  const std::string s(text);
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
    throw InvalidArgument("date must be YYYY-MM-DD: " + s);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InvalidArgument("invalid calendar date: " + s);
  return ymd;
}

std::string format_date(const std::chrono::year_month_day& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

namespace {

int day_of_year(const std::chrono::year_month_day& date) {
  using namespace std::chrono;
  const sys_days jan1 = year_month_day{date.year(), month{1}, day{1}};
  return static_cast<int>((sys_days{date} - jan1).count()) + 1;
}

}  // namespace

Vec3 sun_position(const GeoTemporal& geo, double solar_hours) {
  if (!(std::abs(geo.latitude_deg) <= 90.0)) throw InvalidArgument("latitude must be within [-90, 90]");
  const double days_in_year = geo.date.year().is_leap() ? 366.0 : 365.0;
  const double g = 2.0 * kPi / days_in_year * (day_of_year(geo.date) - 1 + (solar_hours - 12.0) / 24.0);
  const double decl = 0.006918 - 0.399912 * std::cos(g) + 0.070257 * std::sin(g) - 0.006758 * std::cos(2 * g) +
                      0.000907 * std::sin(2 * g) - 0.002697 * std::cos(3 * g) + 0.00148 * std::sin(3 * g);
  const double hour_angle = 15.0 * (solar_hours - 12.0) * kDegToRad;
  const double lat = geo.latitude_deg * kDegToRad;

  const Vec3 d(-std::cos(decl) * std::sin(hour_angle),
               std::cos(lat) * std::sin(decl) - std::sin(lat) * std::cos(decl) * std::cos(hour_angle),
               std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle));
  return d.normalized();
}

double azimuth_deg(const Vec3& d) {
  double a = std::atan2(d.x(), d.y()) * kRadToDeg;
  return a < 0.0 ? a + 360.0 : a;
}

double elevation_deg(const Vec3& d) { return std::asin(std::clamp(d.normalized().z(), -1.0, 1.0)) * kRadToDeg; }

// ---------------------------------------------------------------------------
// Sun visibility

bool sun_visible(const EnvironmentMap& env, double reference_sun_intensity) {
  if (!(reference_sun_intensity > 0.0)) throw InvalidArgument("reference sun intensity must be positive");
  return env.max_luminance() > 0.20 * reference_sun_intensity;
}

double day_visibility_fraction(std::span<const EnvironmentMap> envs, std::optional<double> reference_sun_intensity) {
  if (envs.empty()) throw InvalidArgument("visibility fraction needs at least one map");
  double reference = 0.0;
  if (reference_sun_intensity) {
    reference = *reference_sun_intensity;
    if (!(reference > 0.0)) throw InvalidArgument("reference sun intensity must be positive");
  } else {
    for (const auto& e : envs) reference = std::max(reference, e.max_luminance());
    if (reference <= 0.0) return 0.0;
  }
  std::size_t visible = 0;
  for (const auto& e : envs) visible += sun_visible(e, reference);
  return static_cast<double>(visible) / static_cast<double>(envs.size());
}

DayClass classify_day(double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("visibility fraction must be in [0, 1]");
  if (fraction < 0.15) return DayClass::Overcast;
  if (fraction < 0.50) return DayClass::MixedOvercast;
  if (fraction < 0.85) return DayClass::MixedClear;
  return DayClass::Clear;
}

std::string_view to_string(DayClass c) {
  switch (c) {
    case DayClass::Overcast: return "overcast";
    case DayClass::MixedOvercast: return "mixed_overcast";
    case DayClass::MixedClear: return "mixed_clear";
    case DayClass::Clear: return "clear";
  }
  return "unknown";
}

std::vector<EnvironmentMap> simulate_cloud_sequence(const GeoTemporal& geo, const SkyParams& params,
                                                    std::span<const double> attenuation, int width,
                                                    int height) {
  geo.validate();
  if (attenuation.size() != geo.timestamps.size())
    throw InvalidArgument("occlusion pattern length must match the timestamp count");
  for (double a : attenuation)
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("sun attenuation must be in [0, 1]");

  std::vector<EnvironmentMap> out;
  out.reserve(attenuation.size());
  for (std::size_t t = 0; t < attenuation.size(); ++t) {
    const Vec3 sun = sun_position(geo, geo.timestamps[t]);
    if (sun.z() <= 0.0) {
      params.validate();
      out.emplace_back(width, height, Rgb::Zero());
    } else {
      out.push_back(render_sky(sun, params, width, height, attenuation[t]));
    }
  }
  return out;
}

std::vector<EnvironmentMap> render_day(const GeoTemporal& geo, const SkyParams& params, int width, int height) {
  const std::vector<double> ones(geo.timestamps.size(), 1.0);
  return simulate_cloud_sequence(geo, params, ones, width, height);
}

double clear_sun_reference(const GeoTemporal& geo, const SkyParams& params, int width, int height) {
  double reference = 0.0;
  for (const auto& e : render_day(geo, params, width, height)) reference = std::max(reference, e.max_luminance());
  return reference;
}

}  // namespace skyps
