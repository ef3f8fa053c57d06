#pragma once

#include <span>
#include <vector>

#include "skyps/conditioning.hpp"
#include "skyps/lighting.hpp"
#include "skyps/photometrics.hpp"
#include "skyps/types.hpp"

namespace skyps {

enum class SolveMethod { Lsq, Ratio };

struct SolveOptions {
  SolveMethod method = SolveMethod::Lsq;
  int max_iters = 50;
  double tol_deg = 0.06;
  double smoothing_weight = 0.0;
  int smoothing_passes = 1;
  // Conditioning flags: a pixel is flagged when its 95% interval, at this noise
  // level and the recovered albedo, exceeds max_ci_deg.
  double sigma = 0.01;
  double max_ci_deg = 15.0;
  // Ratio solver needs at least two intensities strictly above this.
  double noise_floor = 0.0;
  Vec3 view_dir = default_view_dir();

  void validate() const;
};

/// Albedo-scaled normal x = albedo * normal.
struct ScaledNormal {
  Vec3 x = Vec3::Zero();
  double albedo = 0.0;
  Vec3 normal = Vec3::Zero();
};

struct PixelSolution {
  Vec3 normal = Vec3::Zero();
  double albedo = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ill_posed = false;  // L singular at some iterate
  bool flagged = false;    // badly conditioned or ill-posed
  double residual = 0.0;   // ‖L(n) * albedo * n - b‖
  double lambda_max = 0.0;
  double ci_deg = 0.0;
};

/// Normal-equations solution x = (LᵀL)^-1 Lᵀ b.
ScaledNormal solve_pixel_lsq(const LightRows& L, std::span<const double> b);

/// Least squares with the lighting re-evaluated at the current normal until
/// the normal stops moving. Starts from -view_dir, then from the best coarse
/// candidates unless the first run fits exactly; the lowest residual is kept.
PixelSolution solve_pixel_fixed_point(std::span<const EnvironmentMap> envs, std::span<const double> b,
                                      const SolveOptions& options);

/// All-pairs intensity-ratio solver: the normal spans the null direction of the
/// rows b_s l_t - b_t l_s (t < s), so it does not depend on albedo. Uses the
/// same fixed-point lighting update; albedo is fitted afterwards.
PixelSolution solve_pixel_ratio(std::span<const EnvironmentMap> envs, std::span<const double> b,
                                const SolveOptions& options);

/// Dispatches on options.method.
PixelSolution solve_pixel(std::span<const EnvironmentMap> envs, std::span<const double> b,
                          const SolveOptions& options);

struct Reconstruction {
  NormalMap normals;
  Grid<PixelSolution> pixels;
};

/// Per-pixel solve on image luminance, then optional conditioning-weighted
/// smoothing. Pixels whose normal is undefined (too dark) are left invalid.
Reconstruction reconstruct_normal_map(std::span<const RgbImage> images, std::span<const EnvironmentMap> envs,
                                      const Mask& mask, const SolveOptions& options);

/// One Jacobi pass per `passes`: each normal becomes the normalised sum of itself
/// and weight * its 4-neighbours, every term weighted by 1 / lambda_max.
NormalMap smooth_normals(const NormalMap& normals, const Grid<double>& lambda_max, double weight, int passes = 1);

}  // namespace skyps
