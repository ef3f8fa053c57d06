#include "skyps/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "skyps/parallel.hpp"

namespace skyps {

void SolveOptions::validate() const {
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(tol_deg > 0.0)) throw InvalidArgument("tol_deg must be positive");
  if (!(smoothing_weight >= 0.0)) throw InvalidArgument("smoothing weight must be nonnegative");
  if (smoothing_passes < 0) throw InvalidArgument("smoothing passes must be nonnegative");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  require_unit(view_dir, "view direction");
}

ScaledNormal solve_pixel_lsq(const LightRows& L, std::span<const double> b) {
  if (L.rows() < 3) throw InvalidArgument("need at least 3 observations");
  if (static_cast<std::size_t>(L.rows()) != b.size()) throw InvalidArgument("intensity count must match L rows");
  const Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  ScaledNormal s;
  s.x = normal_matrix_inverse(L) * (L.transpose() * bv);
  s.albedo = s.x.norm();
  if (!(s.albedo > 0.0)) throw UndefinedNormalError("zero albedo-scaled normal");
  s.normal = s.x / s.albedo;
  return s;
}

namespace {

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * kRadToDeg;
}

// Camera-facing: no component along the viewing direction.
Vec3 fold_towards_camera(Vec3 n, const Vec3& view_dir) {
  const double along = n.dot(view_dir);
  if (along > 0.0) n -= 2.0 * along * view_dir;
  return n;
}

double fit_albedo(const LightRows& L, const Eigen::Map<const Eigen::VectorXd>& b, const Vec3& n) {
  const Eigen::VectorXd shading = L * n;
  const double den = shading.squaredNorm();
  return den > 0.0 ? shading.dot(b) / den : 0.0;
}

struct Step {
  Vec3 normal;
  double albedo;
};

// Null direction of the (optionally weighted) ratio rows.
Vec3 smallest_right_singular(const Eigen::Matrix<double, Eigen::Dynamic, 3>& A) {
  const Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 3>> svd(A, Eigen::ComputeFullV);
  return svd.matrixV().col(2);
}

Step ratio_step(const LightRows& L, const Eigen::Map<const Eigen::VectorXd>& b) {
  const Eigen::Index T = L.rows();
  Eigen::Matrix<double, Eigen::Dynamic, 3> A(T * (T - 1) / 2, 3);
  Eigen::Index r = 0;
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index s = t + 1; s < T; ++s) A.row(r++) = b[s] * L.row(t) - b[t] * L.row(s);

  Vec3 n = smallest_right_singular(A);

  // One Huber-reweighted pass on the row residuals.
  const Eigen::VectorXd res = (A * n).cwiseAbs();
  std::vector<double> sorted(res.data(), res.data() + res.size());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double scale = 1.4826 * *mid;
  if (scale > 0.0) {
    constexpr double k = 1.345;
    Eigen::Matrix<double, Eigen::Dynamic, 3> W = A;
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      const double w = res[i] > k * scale ? k * scale / res[i] : 1.0;
      W.row(i) *= std::sqrt(w);
    }
    n = smallest_right_singular(W);
  }

  n.normalize();
  double albedo = fit_albedo(L, b, n);
  if (albedo < 0.0) {
    n = -n;
    albedo = -albedo;
  }
  return {n, albedo};
}

Step lsq_step(const LightRows& L, const Eigen::Map<const Eigen::VectorXd>& b) {
  const ScaledNormal s = solve_pixel_lsq(L, std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
  return {s.normal, s.albedo};
}

struct Run {
  PixelSolution sol;
  LightRows L;
};

template <typename StepFn>
Run run_from(std::span<const EnvironmentMap> envs, const Eigen::Map<const Eigen::VectorXd>& bv,
             const SolveOptions& options, StepFn step, Vec3 n) {
  struct Iterate {
    Vec3 normal;
    double residual;
  };
  std::optional<Iterate> best;

  Run run;
  PixelSolution& sol = run.sol;
  for (int k = 0; k < options.max_iters; ++k) {
    sol.iterations = k + 1;
    const LightingMatrix L = lighting_matrix(envs, n);
    Step s;
    try {
      s = step(L.rows, bv);
    } catch (const IllPosedError&) {
      sol.ill_posed = true;
      break;
    }
    const double residual = (L.rows * (s.albedo * s.normal) - bv).norm();
    if (!best || residual < best->residual) best = Iterate{n, residual};

    const Vec3 target = fold_towards_camera(s.normal, options.view_dir).normalized();
    Vec3 next = 0.5 * n + 0.5 * target;
    next = next.norm() > 1e-9 ? next.normalized() : target;
    const double change = angle_deg(next, n);
    n = next;
    if (change < options.tol_deg) {
      sol.converged = true;
      break;
    }
  }

  if (!sol.converged && best) n = best->normal;
  run.L = lighting_matrix(envs, n).rows;
  sol.normal = n;
  sol.albedo = std::max(0.0, fit_albedo(run.L, bv, n));
  sol.residual = (run.L * (sol.albedo * n) - bv).norm();
  return run;
}

// Levenberg-Marquardt on the scaled normal m = albedo * n, residual
// L(m/|m|) m - b. Only accepted when it lowers the residual.
void polish(std::span<const EnvironmentMap> envs, const Eigen::Map<const Eigen::VectorXd>& bv,
            const SolveOptions& options, Run& run) {
  auto residual_at = [&](const Vec3& m) -> Eigen::VectorXd {
    const Vec3 n = fold_towards_camera(m, options.view_dir);
    return lighting_matrix(envs, n.normalized()).rows * n - bv;
  };
  Vec3 m = run.sol.albedo * run.sol.normal;
  if (m.norm() <= 0.0) return;
  Eigen::VectorXd r = residual_at(m);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  for (int k = 0; k < 50; ++k) {
    Eigen::Matrix<double, Eigen::Dynamic, 3> J(r.size(), 3);
    const double h = 1e-6 * m.norm();
    for (int j = 0; j < 3; ++j) {
      Vec3 mj = m;
      mj[j] += h;
      J.col(j) = (residual_at(mj) - r) / h;
    }
    const Mat3 JtJ = J.transpose() * J;
    const Vec3 g = J.transpose() * r;
    bool improved = false;
    while (mu < 1e8) {
      Mat3 A = JtJ;
      A.diagonal() += mu * JtJ.diagonal().cwiseMax(1e-12);
      const Vec3 next = m - A.ldlt().solve(g);
      const Eigen::VectorXd rn = residual_at(next);
      if (next.norm() > 0.0 && rn.squaredNorm() < cost) {
        const double change = angle_deg(next, m);
        m = next;
        r = rn;
        cost = rn.squaredNorm();
        mu = std::max(mu * 0.3, 1e-9);
        improved = change >= 1e-4;
        break;
      }
      mu *= 10.0;
    }
    if (!improved) break;
  }
  const Vec3 n = fold_towards_camera(m, options.view_dir).normalized();
  const LightRows L = lighting_matrix(envs, n).rows;
  const double albedo = std::max(0.0, fit_albedo(L, bv, n));
  const double res = (L * (albedo * n) - bv).norm();
  if (res < run.sol.residual) {
    run.sol.normal = n;
    run.sol.albedo = albedo;
    run.sol.residual = res;
    run.L = L;
  }
}

// Coarse camera-facing candidates around -view_dir: rings at 30, 60, 90 degrees.
std::vector<Vec3> candidate_normals(const Vec3& view_dir) {
  const Vec3 front = -view_dir;
  Vec3 up = Vec3::UnitZ() - Vec3::UnitZ().dot(front) * front;
  up = up.norm() > 1e-6 ? up.normalized() : front.unitOrthogonal();
  const Vec3 side = front.cross(up);
  std::vector<Vec3> out;
  for (const auto& [tilt, count] : {std::pair{30.0, 8}, std::pair{60.0, 12}, std::pair{90.0, 12}}) {
    for (int k = 0; k < count; ++k) {
      const double phi = 2.0 * kPi * k / count, t = tilt * kDegToRad;
      out.push_back((std::cos(t) * front + std::sin(t) * (std::cos(phi) * up + std::sin(phi) * side)).normalized());
    }
  }
  return out;
}

// -view_dir, then the best few coarse candidates by one-shot residual.
std::vector<Vec3> start_normals(std::span<const EnvironmentMap> envs, const Eigen::Map<const Eigen::VectorXd>& bv,
                                const Vec3& view_dir) {
  std::vector<std::pair<double, Vec3>> scored;
  for (const Vec3& n : candidate_normals(view_dir)) {
    const LightRows L = lighting_matrix(envs, n).rows;
    const double albedo = std::max(0.0, fit_albedo(L, bv, n));
    scored.emplace_back((L * (albedo * n) - bv).norm(), n);
  }
  const std::size_t keep = std::min<std::size_t>(5, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(scored[i].second);
  return out;
}

template <typename StepFn>
PixelSolution fixed_point(std::span<const EnvironmentMap> envs, std::span<const double> b,
                          const SolveOptions& options, StepFn step) {
  options.validate();
  if (envs.size() < 3) throw InvalidArgument("need at least 3 environment maps");
  if (envs.size() != b.size()) throw InvalidArgument("intensity count must match the map count");
  const Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));

  // Spurious fixed points exist; an exact fit from the first start is kept,
  // otherwise the lowest-residual run wins.
  const double exact = 1e-9 * bv.norm();
  std::optional<Run> best;
  auto consider = [&](Run run) {
    if (run.sol.ill_posed && best) return;
    if (!best || best->sol.ill_posed || run.sol.residual < best->sol.residual) best = std::move(run);
  };
  consider(run_from(envs, bv, options, step, -options.view_dir));
  if (best->sol.ill_posed || best->sol.residual > exact) {
    int iterations = best->sol.iterations;
    for (const Vec3& start : start_normals(envs, bv, options.view_dir)) {
      Run run = run_from(envs, bv, options, step, start);
      iterations += run.sol.iterations;
      consider(std::move(run));
      if (!best->sol.ill_posed && best->sol.residual <= exact) break;
    }
    best->sol.iterations = iterations;
  }

  if (!best->sol.ill_posed && best->sol.residual > exact) polish(envs, bv, options, *best);

  PixelSolution sol = best->sol;
  const Vec3 out = sol.normal;
  try {
    const NoiseModel noise{options.sigma};
    const double albedo = sol.albedo > 0.0 ? sol.albedo : 1.0;
    const ConditioningReport rep = confidence_interval(best->L, noise, albedo, out);
    sol.lambda_max = rep.lambda_max();
    sol.ci_deg = rep.ci_upper_deg;
    sol.flagged = rep.badly_conditioned || rep.ci_upper_deg > options.max_ci_deg;
  } catch (const IllPosedError&) {
    sol.ill_posed = true;
    sol.lambda_max = std::numeric_limits<double>::infinity();
    sol.ci_deg = std::numeric_limits<double>::infinity();
  }
  sol.flagged = sol.flagged || sol.ill_posed;
  return sol;
}

}  // namespace

PixelSolution solve_pixel_fixed_point(std::span<const EnvironmentMap> envs, std::span<const double> b,
                                      const SolveOptions& options) {
  return fixed_point(envs, b, options, lsq_step);
}

PixelSolution solve_pixel_ratio(std::span<const EnvironmentMap> envs, std::span<const double> b,
                                const SolveOptions& options) {
  if (envs.size() < 3 || b.size() < 3) throw InvalidArgument("need at least 3 observations");
  const auto lit = std::count_if(b.begin(), b.end(), [&](double v) { return v > options.noise_floor; });
  if (lit < 2) throw UndefinedNormalError("fewer than two intensities above the noise floor");
  return fixed_point(envs, b, options, ratio_step);
}

PixelSolution solve_pixel(std::span<const EnvironmentMap> envs, std::span<const double> b,
                          const SolveOptions& options) {
  return options.method == SolveMethod::Ratio ? solve_pixel_ratio(envs, b, options)
                                              : solve_pixel_fixed_point(envs, b, options);
}

NormalMap smooth_normals(const NormalMap& normals, const Grid<double>& lambda_max, double weight, int passes) {
  if (!lambda_max.same_shape(normals.normals)) throw InvalidArgument("gain map shape mismatch");
  if (!(weight >= 0.0)) throw InvalidArgument("smoothing weight must be nonnegative");
  if (weight == 0.0 || passes <= 0) return normals;

  const int w = normals.width(), h = normals.height();
  Grid<double> confidence(w, h, 0.0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double g = lambda_max[i];
    confidence[i] = std::isfinite(g) && g > 0.0 ? 1.0 / g : 0.0;
  }

  NormalMap cur = normals;
  for (int p = 0; p < passes; ++p) {
    NormalMap next = cur;
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < w; ++x) {
        if (!cur.valid(x, y)) continue;
        Vec3 acc = confidence(x, y) * cur.normals(x, y);
        constexpr int dx[] = {1, -1, 0, 0};
        constexpr int dy[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = x + dx[k], ny = y + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || !cur.valid(nx, ny)) continue;
          acc += weight * confidence(nx, ny) * cur.normals(nx, ny);
        }
        if (acc.norm() > 0.0) next.normals(x, y) = acc.normalized();
      }
    });
    cur = std::move(next);
  }
  return cur;
}

Reconstruction reconstruct_normal_map(std::span<const RgbImage> images, std::span<const EnvironmentMap> envs,
                                      const Mask& mask, const SolveOptions& options) {
  options.validate();
  if (images.size() < 3) throw InvalidArgument("need at least 3 images");
  if (images.size() != envs.size()) throw InvalidArgument("image and environment map counts differ");
  const int w = mask.width(), h = mask.height();
  for (const auto& img : images)
    if (!img.same_shape(mask)) throw InvalidArgument("image shape does not match the mask");

  Reconstruction out{NormalMap(w, h), Grid<PixelSolution>(w, h)};
  Grid<double> gains(w, h, std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<double> b(images.size());
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      for (std::size_t t = 0; t < images.size(); ++t) b[t] = luminance(images[t](x, y));
      try {
        const PixelSolution s = solve_pixel(envs, b, options);
        out.pixels(x, y) = s;
        out.normals.set(x, y, s.normal);
        gains(x, y) = s.lambda_max;
      } catch (const UndefinedNormalError&) {
        PixelSolution s;
        s.flagged = true;
        s.ill_posed = true;
        out.pixels(x, y) = s;
      }
    }
  });

  if (options.smoothing_weight > 0.0)
    out.normals = smooth_normals(out.normals, gains, options.smoothing_weight, options.smoothing_passes);
  return out;
}

}  // namespace skyps
