#include "skyps/photometrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skyps/parallel.hpp"

namespace skyps {

void BRDFParams::validate() const {
  if (!((base_color >= 0.0).all() && (base_color <= 1.0).all())) throw InvalidArgument("base colour must be in [0,1]^3");
  if (!(mix >= 0.0 && mix <= 1.0)) throw InvalidArgument("diffuse/specular mix must be in [0,1]");
  if (!(roughness > 0.0 && roughness <= 1.0)) throw InvalidArgument("roughness must be in (0,1]");
}

void require_unit(const Vec3& n, const char* what) {
  if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) throw InvalidArgument(std::string(what) + " must be unit length");
}

Vec3 mean_light_vector(const EnvironmentMap& env, const Vec3& n) {
  require_unit(n, "normal");
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < env.pixel_count(); ++i) {
    const Vec3& w = env.direction(i);
    if (w.dot(n) > 0.0) sum += env.weighted_luminance(i) * w;
  }
  return sum / kPi;
}

std::array<Vec3, 3> mean_light_vector_rgb(const EnvironmentMap& env, const Vec3& n) {
  require_unit(n, "normal");
  std::array<Vec3, 3> sum{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  for (std::size_t i = 0; i < env.pixel_count(); ++i) {
    const Vec3& w = env.direction(i);
    if (w.dot(n) > 0.0) {
      const Rgb& l = env.weighted_radiance(i);
      for (int c = 0; c < 3; ++c) sum[c] += l[c] * w;
    }
  }
  for (auto& s : sum) s /= kPi;
  return sum;
}

LightingMatrix lighting_matrix(std::span<const EnvironmentMap> envs, const Vec3& n) {
  if (envs.empty()) throw InvalidArgument("lighting matrix needs at least one environment map");
  LightingMatrix L;
  L.normal = n;
  L.rows.resize(static_cast<Eigen::Index>(envs.size()), 3);
  for (std::size_t t = 0; t < envs.size(); ++t)
    L.rows.row(static_cast<Eigen::Index>(t)) = mean_light_vector(envs[t], n).transpose();
  return L;
}

double shade_lambertian(const EnvironmentMap& env, const Vec3& n, double albedo) {
  require_unit(n, "normal");
  if (!(albedo >= 0.0)) throw InvalidArgument("albedo must be nonnegative");
  double sum = 0.0;
  for (std::size_t i = 0; i < env.pixel_count(); ++i) {
    const double c = env.direction(i).dot(n);
    if (c > 0.0) sum += env.weighted_luminance(i) * c;
  }
  return albedo / kPi * sum;
}

Rgb shade_lambertian_rgb(const EnvironmentMap& env, const Vec3& n, const Rgb& albedo) {
  require_unit(n, "normal");
  Rgb sum = Rgb::Zero();
  for (std::size_t i = 0; i < env.pixel_count(); ++i) {
    const double c = env.direction(i).dot(n);
    if (c > 0.0) sum += env.weighted_radiance(i) * c;
  }
  return albedo / kPi * sum;
}

double ggx_specular(const Vec3& light, const Vec3& out, const Vec3& n, double roughness) {
  const double nl = n.dot(light);
  const double nv = n.dot(out);
  if (nl <= 0.0 || nv <= 0.0) return 0.0;
  const Vec3 half = (light + out).normalized();
  const double nh = std::max(n.dot(half), 0.0);
  const double vh = std::max(out.dot(half), 0.0);

  const double a = roughness * roughness;
  const double a2 = a * a;
  const double denom = nh * nh * (a2 - 1.0) + 1.0;
  const double ndf = a2 / (kPi * denom * denom);
  const double vis = 0.5 / (nl * std::sqrt(nv * nv * (1.0 - a2) + a2) + nv * std::sqrt(nl * nl * (1.0 - a2) + a2));
  constexpr double f0 = 0.04;
  const double fresnel = f0 + (1.0 - f0) * std::pow(1.0 - vh, 5.0);
  return ndf * vis * fresnel;
}

Rgb shade_ggx(const EnvironmentMap& env, const Vec3& n, const Vec3& view_dir, const BRDFParams& brdf) {
  require_unit(n, "normal");
  require_unit(view_dir, "view direction");
  brdf.validate();
  const Vec3 out = -view_dir;
  if (!(n.dot(out) > 0.0)) throw InvalidArgument("normal faces away from the camera");

  const double diffuse = brdf.mix / kPi;
  const double specular = 1.0 - brdf.mix;
  Rgb sum = Rgb::Zero();
  for (std::size_t i = 0; i < env.pixel_count(); ++i) {
    const Vec3& w = env.direction(i);
    const double c = w.dot(n);
    if (c <= 0.0) continue;
    double f = diffuse;
    if (specular > 0.0) f += specular * ggx_specular(w, out, n, brdf.roughness);
    sum += env.weighted_radiance(i) * (f * c);
  }
  return brdf.base_color * sum;
}

RgbImage render_image(const NormalMap& normals, const BRDFParams& brdf, const EnvironmentMap& env,
                      const Vec3& view_dir) {
  if (!normals.mask.same_shape(normals.normals)) throw InvalidArgument("normal map and mask shapes differ");
  RgbImage img(normals.width(), normals.height(), Rgb::Zero());
  parallel_for(static_cast<std::size_t>(normals.height()), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < normals.width(); ++x)
      if (normals.valid(x, y)) img(x, y) = shade_ggx(env, normals.normals(x, y), view_dir, brdf);
  });
  return img;
}

}  // namespace skyps
