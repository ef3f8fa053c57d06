#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "skyps/types.hpp"

namespace skyps {

struct Percentiles {
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};

struct ErrorSummary {
  double median_deg = 0.0;
  double mean_deg = 0.0;
  double r30 = 0.0;  // fraction of errors <= 30 degrees
  Percentiles percentiles;
  std::size_t count = 0;
};

/// Degrees between est and gt (unit normals) on mask pixels; 0 elsewhere. An estimate that is
/// missing (invalid in est) counts as 90 degrees.
Grid<double> angular_error_map(const NormalMap& est, const NormalMap& gt, const Mask& mask);

/// Linear interpolation between closest ranks: rank q*(n-1).
double percentile(std::vector<double> values, double q);
Percentiles box_percentile(std::span<const double> values);

ErrorSummary summarize(std::span<const double> errors);
ErrorSummary summarize(const Grid<double>& errors, const Mask& mask);

struct SceneScore {
  std::string scene_id;
  ErrorSummary summary;
};

/// scene_id,median_deg,mean_deg,r30,p25,p75
void write_scores_csv(std::span<const SceneScore> scores, const std::filesystem::path& path);

}  // namespace skyps
