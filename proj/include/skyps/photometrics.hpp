#pragma once

#include <array>
#include <span>

#include <Eigen/Core>

#include "skyps/lighting.hpp"
#include "skyps/types.hpp"

namespace skyps {

using LightRows = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// T x 3 stack of luminance mean light vectors for one normal.
struct LightingMatrix {
  LightRows rows;
  Vec3 normal = Vec3::UnitZ();

  Eigen::Index size() const { return rows.rows(); }
};

/// Surface material: Lambertian lobe mixed with GGX.
struct BRDFParams {
  Rgb base_color = Rgb::Constant(0.8);
  double mix = 1.0;        // 1 = purely diffuse
  double roughness = 0.4;  // GGX alpha is roughness^2

  void validate() const;
};

/// Throws InvalidArgument unless |‖n‖ - 1| <= 1e-6.
void require_unit(const Vec3& n, const char* what);

/// (1/pi) * sum over pixels with w.n > 0 of luminance(L) * dw * w.
Vec3 mean_light_vector(const EnvironmentMap& env, const Vec3& n);
/// Same sum per colour channel.
std::array<Vec3, 3> mean_light_vector_rgb(const EnvironmentMap& env, const Vec3& n);

LightingMatrix lighting_matrix(std::span<const EnvironmentMap> envs, const Vec3& n);

/// Lambertian luminance intensity, summed directly over the visible hemisphere.
double shade_lambertian(const EnvironmentMap& env, const Vec3& n, double albedo);
Rgb shade_lambertian_rgb(const EnvironmentMap& env, const Vec3& n, const Rgb& albedo);

/// GGX specular BRDF value (NDF, height-correlated Smith visibility, Schlick F0 = 0.04).
/// `light` and `out` point away from the surface. Zero if either is below the surface.
double ggx_specular(const Vec3& light, const Vec3& out, const Vec3& n, double roughness);

/// Full-sum integration of the Lambert/GGX mixture. `view_dir` is the direction
/// the camera looks along; the surface must face it (n . -view_dir > 0).
Rgb shade_ggx(const EnvironmentMap& env, const Vec3& n, const Vec3& view_dir, const BRDFParams& brdf);

/// Per-pixel shade_ggx over the valid pixels; masked-out pixels are black.
/// Only attached shadows are modelled.
RgbImage render_image(const NormalMap& normals, const BRDFParams& brdf, const EnvironmentMap& env,
                      const Vec3& view_dir);

/// Camera looks North along +y.
inline Vec3 default_view_dir() { return Vec3::UnitY(); }

}  // namespace skyps
