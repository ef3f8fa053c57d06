#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skyps/lighting.hpp"
#include "skyps/lighting_io.hpp"
#include "skyps/photometrics.hpp"
#include "skyps/shapes.hpp"

namespace skyps {

struct DatasetConfig {
  int n_locations = 11;
  double latitude_min_deg = 0.0;
  double latitude_max_deg = 56.0;
  int n_random_days = 6;  // plus both equinoxes and both solstices
  int year = 2014;
  int timestamps = 8;     // hourly from first_hour (solar time)
  double first_hour = 9.0;
  int image_size = 256;
  int patch_size = 16;
  int stride = 8;
  int scenes_per_pair = 2;
  double val_fraction = 0.1;
  int env_width = 64;  // environment maps are env_width x env_width/2
  SkyParams sky;
  std::uint64_t seed = 0;

  void validate() const;
  int pair_count() const { return n_locations * (n_random_days + 4); }
  int scene_count() const { return pair_count() * scenes_per_pair; }
};

Json to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const Json& j);

/// Shape families used by each split. Disjoint by construction.
std::vector<ShapeSpec> train_shapes();
std::vector<ShapeSpec> val_shapes();

/// Triangular(lo, mode, hi) draw.
double sample_triangular(Rng& rng, double lo, double mode, double hi);

/// Hue, saturation, value in [0,1] to linear RGB.
Rgb hsv_to_rgb(double h, double s, double v);

/// H ~ U(0,1), S ~ Tri(0,0,1), V ~ Tri(0,0.75,1) for the base colour,
/// roughness ~ Tri(0.2,0.4,1), diffuse mix ~ U(0,1).
BRDFParams sample_material(Rng& rng);

/// n_locations x (n_random_days + 4) location/day pairs. Each location gets
/// distinct random days plus Mar 20, Jun 21, Sep 23 and Dec 21.
std::vector<GeoTemporal> sample_geotemporal(Rng& rng, const DatasetConfig& config);

/// Independent stream for scene `index`.
Rng scene_rng(std::uint64_t seed, std::uint64_t index);

struct ScenePlan {
  std::string id;
  std::string split;  // "train" or "val"
  ShapeSpec shape;
  BRDFParams brdf;
  GeoTemporal geo;
  std::vector<Vec3> sun_dirs;
  std::uint64_t index = 0;
};

/// Everything but the pixels: deterministic in (config, seed).
std::vector<ScenePlan> plan_dataset(const DatasetConfig& config);

struct SceneRecord {
  ScenePlan plan;
  NormalMap normals;
  std::vector<EnvironmentMap> envs;
  std::vector<RgbImage> images;
};

/// Renders one planned scene. Timestamps with the sun below the horizon get a
/// black sky and therefore black images.
SceneRecord render_scene(const ScenePlan& plan, const DatasetConfig& config);

Json manifest_json(const DatasetConfig& config, const std::vector<ScenePlan>& plans);

/// Writes scene_XXXXX/{img_00..,normals.pfm,meta.json} and manifest.json.
/// With render = false only the manifest is written.
Json generate_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir, bool render = true);

/// Mirror as if captured in the other hemisphere: images and normals flipped
/// left-right (n_x negated) and the timestamp order reversed. An involution.
SceneRecord mirror_hemisphere(const SceneRecord& scene);

struct Patch {
  int x = 0;  // top-left corner
  int y = 0;
  std::vector<std::vector<Rgb>> images;  // T crops, row-major P*P
  std::vector<Vec3> normals;              // P*P
};

/// Aligned P x P crops at the given stride, kept only when fully on the mask.
std::vector<Patch> extract_patches(const SceneRecord& scene, int P, int stride);
std::vector<Patch> extract_patches(const std::vector<RgbImage>& images, const NormalMap& normals, int P, int stride);

/// Flat f32 little-endian tensor: per patch T*P*P*3 image values then P*P*3
/// normal values, row-major. The header goes to a JSON file next to it.
void write_patches(const std::filesystem::path& bin_path, const std::filesystem::path& header_path,
                   const std::vector<Patch>& patches, int T, int P);

}  // namespace skyps
