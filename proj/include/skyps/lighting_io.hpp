#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "skyps/lighting.hpp"
#include "skyps/photometrics.hpp"

namespace skyps {

using Json = nlohmann::json;

Json to_json(const GeoTemporal& geo);
GeoTemporal geo_from_json(const Json& j);
Json to_json(const SkyParams& params);
SkyParams sky_params_from_json(const Json& j);
Json to_json(const BRDFParams& brdf);
BRDFParams brdf_from_json(const Json& j);
Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

/// Row 0 (zenith) is the top of the file.
void write_environment_map(const std::filesystem::path& path, const EnvironmentMap& env);
EnvironmentMap read_environment_map(const std::filesystem::path& path);

/// One capture of a day: the map and the conditions it was rendered under.
struct LightingFrame {
  EnvironmentMap env;
  double solar_hour = 12.0;
  Vec3 sun_dir = Vec3::UnitZ();
  double attenuation = 1.0;
  GeoTemporal geo;
  SkyParams sky;
};

Json frame_sidecar(const LightingFrame& frame);

/// sky_XX.pfm plus sky_XX.json in dir.
void write_lighting_frame(const std::filesystem::path& dir, std::size_t index, const LightingFrame& frame);

/// The sky_*.pfm maps of dir in name order. Every map needs its .json sidecar.
std::vector<EnvironmentMap> load_lighting_dir(const std::filesystem::path& dir);

/// PFM files of dir matching prefix, sorted by name.
std::vector<std::filesystem::path> list_pfm(const std::filesystem::path& dir, std::string_view prefix);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace skyps
