#include "skyps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include <Eigen/Geometry>

namespace skyps {

Grid<double> angular_error_map(const NormalMap& est, const NormalMap& gt, const Mask& mask) {
  if (!est.normals.same_shape(gt.normals) || !mask.same_shape(gt.normals))
    throw InvalidArgument("normal maps and mask must share a shape");
  Grid<double> err(mask.width(), mask.height(), 0.0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      if (!est.valid(x, y)) {
        err(x, y) = 90.0;
        continue;
      }
      const Vec3& a = est.normals(x, y);
      const Vec3& b = gt.normals(x, y);
      err(x, y) = std::atan2(a.cross(b).norm(), a.dot(b)) * kRadToDeg;
    }
  return err;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("percentile rank must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Percentiles box_percentile(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("box percentile of an empty set");
  const std::vector<double> v(values.begin(), values.end());
  return {percentile(v, 0.25), percentile(v, 0.50), percentile(v, 0.75)};
}

ErrorSummary summarize(std::span<const double> errors) {
  if (errors.empty()) throw InvalidArgument("no pixels to summarise");
  ErrorSummary s;
  s.count = errors.size();
  s.percentiles = box_percentile(errors);
  s.median_deg = s.percentiles.p50;
  s.mean_deg = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  const auto within = std::count_if(errors.begin(), errors.end(), [](double e) { return e <= 30.0; });
  s.r30 = static_cast<double>(within) / static_cast<double>(errors.size());
  return s;
}

ErrorSummary summarize(const Grid<double>& errors, const Mask& mask) {
  if (!errors.same_shape(mask)) throw InvalidArgument("error map and mask shapes differ");
  std::vector<double> v;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) v.push_back(errors[i]);
  if (v.empty()) throw InvalidArgument("mask is empty");
  return summarize(v);
}

void write_scores_csv(std::span<const SceneScore> scores, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "scene_id,median_deg,mean_deg,r30,p25,p75\n" << std::setprecision(8);
  for (const auto& s : scores)
    out << s.scene_id << ',' << s.summary.median_deg << ',' << s.summary.mean_deg << ',' << s.summary.r30 << ','
        << s.summary.percentiles.p25 << ',' << s.summary.percentiles.p75 << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace skyps
