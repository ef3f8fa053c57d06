#include <algorithm>
#include <cmath>

#include "skyps/lighting.hpp"

namespace skyps {

namespace {

// Physical luminance of the solar disc, kcd/m^2. Sky luminance from the
// Preetham model (also kcd/m^2) is scaled by default_sun_radiance_scale() /
// kSolarLuminance so that sky and sun share relative units.
constexpr double kSolarLuminance = 1.6e6;

double cap_solid_angle(double radius_rad) { return 2.0 * kPi * (1.0 - std::cos(radius_rad)); }

struct Perez {
  double a, b, c, d, e;

  double operator()(double cos_theta, double gamma) const {
    const double cg = std::cos(gamma);
    return (1.0 + a * std::exp(b / std::max(cos_theta, 0.01))) * (1.0 + c * std::exp(d * gamma) + e * cg * cg);
  }
};

struct PreethamSky {
  Perez x, y, lum;
  double zenith_x, zenith_y, zenith_lum;
  double sun_theta;
  Vec3 sun;

  PreethamSky(const Vec3& sun_dir, double t) : sun(sun_dir.normalized()) {
    sun_theta = std::acos(std::clamp(sun.z(), -1.0, 1.0));
    lum = {0.1787 * t - 1.4630, -0.3554 * t + 0.4275, -0.0227 * t + 5.3251, 0.1206 * t - 2.5771,
           -0.0670 * t + 0.3703};
    x = {-0.0193 * t - 0.2592, -0.0665 * t + 0.0008, -0.0004 * t + 0.2125, -0.0641 * t - 0.8989,
         -0.0033 * t + 0.0452};
    y = {-0.0167 * t - 0.2608, -0.0950 * t + 0.0092, -0.0079 * t + 0.2102, -0.0441 * t - 1.6537,
         -0.0109 * t + 0.0529};

    const double s = sun_theta, s2 = s * s, s3 = s2 * s, t2 = t * t;
    const double chi = (4.0 / 9.0 - t / 120.0) * (kPi - 2.0 * s);
    zenith_lum = std::max(0.0, (4.0453 * t - 4.9710) * std::tan(chi) - 0.2155 * t + 2.4192);
    zenith_x = t2 * (0.00166 * s3 - 0.00375 * s2 + 0.00209 * s) +
               t * (-0.02903 * s3 + 0.06377 * s2 - 0.03202 * s + 0.00394) +
               (0.11693 * s3 - 0.21196 * s2 + 0.06052 * s + 0.25886);
    zenith_y = t2 * (0.00275 * s3 - 0.00610 * s2 + 0.00317 * s) +
               t * (-0.04214 * s3 + 0.08970 * s2 - 0.04153 * s + 0.00516) +
               (0.15346 * s3 - 0.26756 * s2 + 0.06670 * s + 0.26688);
  }

  // Linear Rec.709 radiance in kcd/m^2 for an upper-hemisphere direction.
  Rgb radiance(const Vec3& dir) const {
    const double cos_theta = dir.z();
    const double gamma = std::acos(std::clamp(dir.dot(sun), -1.0, 1.0));
    const double Y = zenith_lum * lum(cos_theta, gamma) / lum(1.0, sun_theta);
    const double cx = zenith_x * x(cos_theta, gamma) / x(1.0, sun_theta);
    const double cy = zenith_y * y(cos_theta, gamma) / y(1.0, sun_theta);
    if (!(Y > 0.0) || !(cy > 0.0)) return Rgb::Zero();
    const double X = cx * Y / cy;
    const double Z = (1.0 - cx - cy) * Y / cy;
    Rgb rgb(3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z, -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z,
            0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z);
    return rgb.max(0.0);
  }
};

}  // namespace

double default_sun_radiance_scale() { return kPi / cap_solid_angle(0.2665 * kDegToRad); }

void SkyParams::validate() const {
  if (!std::isfinite(turbidity) || turbidity < 1.0) throw InvalidArgument("turbidity must be >= 1");
  if (!(ground_albedo >= 0.0 && ground_albedo <= 1.0)) throw InvalidArgument("ground albedo must be in [0, 1]");
  if (!std::isfinite(sun_disc_radius_deg) || sun_disc_radius_deg < 0.0)
    throw InvalidArgument("sun disc radius must be finite and nonnegative");
  if (!std::isfinite(sun_radiance_scale) || sun_radiance_scale < 0.0)
    throw InvalidArgument("sun radiance scale must be finite and nonnegative");
}

EnvironmentMap render_sky(const Vec3& sun_dir, const SkyParams& params, int width, int height,
                          double sun_attenuation) {
  params.validate();
  if (width < 2 || height < 2) throw InvalidArgument("sky map needs width, height >= 2");
  if (!(sun_attenuation >= 0.0 && sun_attenuation <= 1.0)) throw InvalidArgument("sun attenuation must be in [0, 1]");
  if (!(sun_dir.norm() > 0.0)) throw InvalidArgument("sun direction must be nonzero");
  const Vec3 sun = sun_dir.normalized();
  if (sun.z() <= 0.0) throw NightSkyError("sun is below the horizon");

  const double sky_unit = default_sun_radiance_scale() / kSolarLuminance;
  const PreethamSky sky(sun, params.turbidity);
  const Grid<double> solid = compute_solid_angles(width, height);

  std::vector<Rgb> radiance(static_cast<std::size_t>(width) * height, Rgb::Zero());
  std::vector<bool> upper(radiance.size(), false);
  for (int y = 0; y < height; ++y) {
    const double theta = (y + 0.5) * kPi / height;
    for (int x = 0; x < width; ++x) {
      const Vec3 d = direction_from_angles(theta, (x + 0.5) * 2.0 * kPi / width);
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (d.z() > 1e-12) {
        upper[i] = true;
        radiance[i] = sky.radiance(d) * sky_unit;
      }
    }
  }

  // Solar disc, energy-preserving at any resolution.
  const double radius = params.sun_disc_radius_deg * kDegToRad;
  const double disc_energy = params.sun_radiance_scale * sun_attenuation * cap_solid_angle(radius);
  if (disc_energy > 0.0) {
    const double cos_r = std::cos(radius);
    std::vector<std::size_t> covered;
    double covered_solid = 0.0;
    for (int y = 0; y < height; ++y) {
      const double theta = (y + 0.5) * kPi / height;
      for (int x = 0; x < width; ++x) {
        const Vec3 d = direction_from_angles(theta, (x + 0.5) * 2.0 * kPi / width);
        if (d.dot(sun) >= cos_r) {
          covered.push_back(static_cast<std::size_t>(y) * width + x);
          covered_solid += solid(x, y);
        }
      }
    }
    if (covered.empty() && std::acos(std::clamp(sun.z(), -1.0, 1.0)) < radius) {
      // Disc straddles the zenith: it touches every pixel of the top row.
      for (int x = 0; x < width; ++x) covered.push_back(static_cast<std::size_t>(x));
      covered_solid = width * solid(0, 0);
    }
    if (covered.empty()) {
      const auto [px, py] = pixel_of(sun, width, height);
      covered.push_back(static_cast<std::size_t>(py) * width + px);
      covered_solid = solid(px, py);
    }
    const double disc_radiance = disc_energy / covered_solid;
    for (std::size_t i : covered) radiance[i] += Rgb::Constant(disc_radiance);
  }

  // Constant ground: albedo times horizontal irradiance over pi.
  Rgb irradiance = Rgb::Zero();
  for (int y = 0; y < height; ++y) {
    const double theta = (y + 0.5) * kPi / height;
    const double cos_theta = std::cos(theta);
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (upper[i]) irradiance += radiance[i] * cos_theta * solid(x, y);
    }
  }
  const Rgb ground = params.ground_albedo * irradiance / kPi;
  for (std::size_t i = 0; i < radiance.size(); ++i)
    if (!upper[i]) radiance[i] = ground;

  return {width, height, std::move(radiance)};
}

}  // namespace skyps
