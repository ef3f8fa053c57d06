#pragma once

#include <algorithm>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "skyps/lighting.hpp"
#include "skyps/photometrics.hpp"
#include "skyps/types.hpp"

namespace skyps {

/// LᵀL with a condition number at or above this is treated as singular.
constexpr double kSingularCondition = 1e12;
/// Noise gains above this mark a solution as badly conditioned.
constexpr double kBadlyConditionedGain = 1e4;

/// Zero-mean Gaussian image noise, standard deviation relative to unit intensity.
struct NoiseModel {
  double sigma = 0.01;
};

struct ConditioningReport {
  Mat3 covariance = Mat3::Zero();  // sigma^2 (LᵀL)^-1
  Vec3 gains = Vec3::Zero();       // sqrt(diag((LᵀL)^-1))
  Vec3 deltas = Vec3::Zero();      // 95% half-widths per component, 1.96 sigma gain / albedo
  double theta_plus_deg = 0.0;
  double theta_minus_deg = 0.0;
  double ci_upper_deg = 0.0;  // C_n = [0, ci_upper_deg]
  bool badly_conditioned = false;

  double lambda_max() const { return gains.maxCoeff(); }
};

/// (LᵀL)^-1, or IllPosedError carrying the numerical rank of L.
Mat3 normal_matrix_inverse(const LightRows& L);

Mat3 normal_covariance(const LightRows& L, const NoiseModel& noise);
inline Mat3 normal_covariance(const LightingMatrix& L, const NoiseModel& noise) {
  return normal_covariance(L.rows, noise);
}

Vec3 noise_gains(const LightRows& L);
inline Vec3 noise_gains(const LightingMatrix& L) { return noise_gains(L.rows); }

/// Angular 95% confidence interval of the normal estimate around n.
ConditioningReport confidence_interval(const LightRows& L, const NoiseModel& noise, double albedo, const Vec3& n);
inline ConditioningReport confidence_interval(const LightingMatrix& L, const NoiseModel& noise, double albedo) {
  return confidence_interval(L.rows, noise, albedo, L.normal);
}

struct SphereSample {
  double azimuth_deg;  // compass, from North towards East
  double zenith_deg;
  Vec3 normal;
  double value;
};

/// Scalar field over a latitude-longitude sampling of normal directions.
struct SphereMap {
  double step_deg = 5.0;
  bool full_sphere = false;
  std::vector<SphereSample> samples;
};

/// Normals on a step_deg lat-long grid. Each pole appears once. Unless
/// full_sphere is set, only camera-facing normals (n_y <= 0) are kept.
SphereMap sphere_grid(double step_deg, bool full_sphere = false);

/// C_n upper bound (degrees) per grid normal; +inf where L is singular.
SphereMap reconstructability_map(std::span<const EnvironmentMap> envs, const NoiseModel& noise, double albedo,
                                 double step_deg, bool full_sphere = false);

/// Largest noise gain per grid normal; +inf where L is singular.
SphereMap max_gain_map(std::span<const EnvironmentMap> envs, double step_deg, bool full_sphere = false);

struct MlvSample {
  Vec3 direction = Vec3::Zero();  // zero when the MLV vanishes
  double intensity = 0.0;
  bool zero = false;
};

std::vector<MlvSample> mlv_trajectory(std::span<const EnvironmentMap> envs, const Vec3& n);

/// Median value over the samples accepted by `keep`; NaN if none are.
template <typename Pred>
double median_value(const SphereMap& map, Pred keep) {
  std::vector<double> v;
  for (const auto& s : map.samples)
    if (keep(s)) v.push_back(s.value);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

void write_sphere_csv(const SphereMap& map, const std::filesystem::path& path);

}  // namespace skyps
