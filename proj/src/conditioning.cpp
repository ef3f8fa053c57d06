#include "skyps/conditioning.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "skyps/parallel.hpp"

namespace skyps {

Mat3 normal_matrix_inverse(const LightRows& L) {
  if (L.rows() == 0) throw InvalidArgument("lighting matrix is empty");
  const Mat3 ltl = L.transpose() * L;
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(ltl);
  const Vec3 ev = eig.eigenvalues();  // ascending
  const double largest = ev[2];
  if (!(largest > 0.0) || !(ev[0] > 0.0) || largest / ev[0] >= kSingularCondition) {
    int rank = 0;
    for (int k = 0; k < 3; ++k) rank += largest > 0.0 && ev[k] > largest / kSingularCondition;
    throw IllPosedError("LᵀL is singular (rank " + std::to_string(rank) + ")", rank);
  }
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

Mat3 normal_covariance(const LightRows& L, const NoiseModel& noise) {
  if (!(noise.sigma > 0.0)) throw InvalidArgument("noise sigma must be positive");
  return noise.sigma * noise.sigma * normal_matrix_inverse(L);
}

Vec3 noise_gains(const LightRows& L) {
  return normal_matrix_inverse(L).diagonal().cwiseMax(0.0).cwiseSqrt();
}

ConditioningReport confidence_interval(const LightRows& L, const NoiseModel& noise, double albedo, const Vec3& n) {
  if (!(albedo > 0.0)) throw InvalidArgument("albedo must be positive");
  if (!(noise.sigma > 0.0)) throw InvalidArgument("noise sigma must be positive");
  require_unit(n, "normal");

  const Mat3 inv = normal_matrix_inverse(L);
  ConditioningReport r;
  r.covariance = noise.sigma * noise.sigma * inv;
  r.gains = inv.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.deltas = 1.96 * noise.sigma * r.gains / albedo;

  auto angle_to = [&](const Vec3& v) {
    const double norm = v.norm();
    if (norm == 0.0) return 180.0;
    return std::acos(std::clamp(n.dot(v / norm), -1.0, 1.0)) * kRadToDeg;
  };
  r.theta_plus_deg = angle_to(n + r.deltas);
  r.theta_minus_deg = angle_to(n - r.deltas);
  r.ci_upper_deg = std::max(r.theta_plus_deg, r.theta_minus_deg);
  r.badly_conditioned = r.lambda_max() > kBadlyConditionedGain;
  return r;
}

SphereMap sphere_grid(double step_deg, bool full_sphere) {
  if (!(step_deg > 0.0 && step_deg <= 180.0)) throw InvalidArgument("grid step must be in (0, 180] degrees");
  auto snap = [](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; };

  SphereMap map;
  map.step_deg = step_deg;
  map.full_sphere = full_sphere;
  const int zenith_steps = static_cast<int>(std::floor(180.0 / step_deg + 1e-9));
  const int azimuth_steps = static_cast<int>(std::ceil(360.0 / step_deg - 1e-9));
  for (int i = 0; i <= zenith_steps; ++i) {
    const double zen = i * step_deg;
    const bool pole = zen < 1e-9 || std::abs(zen - 180.0) < 1e-9;
    for (int j = 0; j < (pole ? 1 : azimuth_steps); ++j) {
      const double az = j * step_deg;
      Vec3 n = direction_from_angles(zen * kDegToRad, az * kDegToRad);
      n = Vec3(snap(n.x()), snap(n.y()), snap(n.z())).normalized();
      if (!full_sphere && n.y() > 0.0) continue;
      map.samples.push_back({az, zen, n, 0.0});
    }
  }
  return map;
}

namespace {

void require_day(std::span<const EnvironmentMap> envs) {
  if (envs.empty()) throw InvalidArgument("need a sequence of environment maps");
  if (envs.size() < 3) throw InvalidArgument("need at least 3 environment maps");
}

}  // namespace

SphereMap reconstructability_map(std::span<const EnvironmentMap> envs, const NoiseModel& noise, double albedo,
                                 double step_deg, bool full_sphere) {
  require_day(envs);
  if (!(albedo > 0.0)) throw InvalidArgument("albedo must be positive");
  if (!(noise.sigma > 0.0)) throw InvalidArgument("noise sigma must be positive");
  SphereMap map = sphere_grid(step_deg, full_sphere);
  parallel_for(map.samples.size(), [&](std::size_t i) {
    auto& s = map.samples[i];
    try {
      s.value = confidence_interval(lighting_matrix(envs, s.normal), noise, albedo).ci_upper_deg;
    } catch (const IllPosedError&) {
      s.value = std::numeric_limits<double>::infinity();
    }
  });
  return map;
}

SphereMap max_gain_map(std::span<const EnvironmentMap> envs, double step_deg, bool full_sphere) {
  require_day(envs);
  SphereMap map = sphere_grid(step_deg, full_sphere);
  parallel_for(map.samples.size(), [&](std::size_t i) {
    auto& s = map.samples[i];
    try {
      s.value = noise_gains(lighting_matrix(envs, s.normal)).maxCoeff();
    } catch (const IllPosedError&) {
      s.value = std::numeric_limits<double>::infinity();
    }
  });
  return map;
}

std::vector<MlvSample> mlv_trajectory(std::span<const EnvironmentMap> envs, const Vec3& n) {
  if (envs.empty()) throw InvalidArgument("need at least one environment map");
  std::vector<MlvSample> out;
  out.reserve(envs.size());
  for (const auto& env : envs) {
    const Vec3 l = mean_light_vector(env, n);
    MlvSample s;
    s.intensity = l.norm();
    s.zero = !(s.intensity > 0.0);
    if (!s.zero) s.direction = l / s.intensity;
    out.push_back(s);
  }
  return out;
}

void write_sphere_csv(const SphereMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "azimuth_deg,zenith_deg,value\n" << std::setprecision(10);
  for (const auto& s : map.samples) out << s.azimuth_deg << ',' << s.zenith_deg << ',' << s.value << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace skyps
