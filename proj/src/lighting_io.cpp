#include "skyps/lighting_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "skyps/pfm.hpp"

namespace fs = std::filesystem;

namespace skyps {

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json to_json(const GeoTemporal& geo) {
  return {{"latitude_deg", geo.latitude_deg},
          {"longitude_deg", geo.longitude_deg},
          {"date", format_date(geo.date)},
          {"timestamps", geo.timestamps}};
}

GeoTemporal geo_from_json(const Json& j) {
  GeoTemporal g;
  g.latitude_deg = j.value("latitude_deg", g.latitude_deg);
  g.longitude_deg = j.value("longitude_deg", g.longitude_deg);
  if (j.contains("date")) g.date = parse_date(j.at("date").get<std::string>());
  if (j.contains("timestamps")) g.timestamps = j.at("timestamps").get<std::vector<double>>();
  g.validate();
  return g;
}

Json to_json(const SkyParams& p) {
  return {{"turbidity", p.turbidity},
          {"ground_albedo", p.ground_albedo},
          {"sun_disc_radius_deg", p.sun_disc_radius_deg},
          {"sun_radiance_scale", p.sun_radiance_scale}};
}

SkyParams sky_params_from_json(const Json& j) {
  SkyParams p;
  p.turbidity = j.value("turbidity", p.turbidity);
  p.ground_albedo = j.value("ground_albedo", p.ground_albedo);
  p.sun_disc_radius_deg = j.value("sun_disc_radius_deg", p.sun_disc_radius_deg);
  p.sun_radiance_scale = j.value("sun_radiance_scale", p.sun_radiance_scale);
  p.validate();
  return p;
}

Json to_json(const BRDFParams& b) {
  return {{"base_color", {b.base_color[0], b.base_color[1], b.base_color[2]}},
          {"mix", b.mix},
          {"roughness", b.roughness}};
}

BRDFParams brdf_from_json(const Json& j) {
  BRDFParams b;
  if (j.contains("base_color")) {
    const Vec3 c = vec3_from_json(j.at("base_color"));
    b.base_color = Rgb(c.x(), c.y(), c.z());
  }
  b.mix = j.value("mix", b.mix);
  b.roughness = j.value("roughness", b.roughness);
  b.validate();
  return b;
}

void write_environment_map(const fs::path& path, const EnvironmentMap& env) {
  RgbImage img(env.width(), env.height());
  for (int y = 0; y < env.height(); ++y)
    for (int x = 0; x < env.width(); ++x) img(x, y) = env.radiance(x, y);
  write_pfm(path, to_pfm(img));
}

EnvironmentMap read_environment_map(const fs::path& path) {
  const RgbImage img = rgb_from_pfm(read_pfm(path));
  return EnvironmentMap(img.width(), img.height(), img.data());
}

Json frame_sidecar(const LightingFrame& f) {
  return {{"solar_hour", f.solar_hour},
          {"sun_dir", to_json(f.sun_dir)},
          {"sun_azimuth_deg", azimuth_deg(f.sun_dir)},
          {"sun_elevation_deg", elevation_deg(f.sun_dir)},
          {"night", f.sun_dir.z() <= 0.0},
          {"attenuation", f.attenuation},
          {"width", f.env.width()},
          {"height", f.env.height()},
          {"geo", to_json(f.geo)},
          {"sky", to_json(f.sky)}};
}

namespace {
std::string frame_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sky_%02zu", index);
  return buf;
}
}  // namespace

void write_lighting_frame(const fs::path& dir, std::size_t index, const LightingFrame& frame) {
  const std::string stem = frame_stem(index);
  write_environment_map(dir / (stem + ".pfm"), frame.env);
  Json side = frame_sidecar(frame);
  side["map"] = stem + ".pfm";
  write_json(dir / (stem + ".json"), side);
}

std::vector<fs::path> list_pfm(const fs::path& dir, std::string_view prefix) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".pfm" && name.starts_with(prefix)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EnvironmentMap> load_lighting_dir(const fs::path& dir) {
  std::vector<EnvironmentMap> envs;
  for (const auto& p : list_pfm(dir, "sky_")) {
    fs::path side = p;
    side.replace_extension(".json");
    if (!fs::is_regular_file(side)) throw IoError("missing lighting sidecar " + side.string());
    const Json j = read_json(side);
    EnvironmentMap env = read_environment_map(p);
    if (j.contains("width") && (j.at("width").get<int>() != env.width() || j.at("height").get<int>() != env.height()))
      throw IoError("sidecar size does not match " + p.string());
    envs.push_back(std::move(env));
  }
  return envs;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError("bad JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace skyps
