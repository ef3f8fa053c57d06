// skyps: outdoor photometric stereo toolkit, command-line front end.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <optional>
#include <tuple>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "skyps/conditioning.hpp"
#include "skyps/lighting.hpp"
#include "skyps/lighting_io.hpp"
#include "skyps/metrics.hpp"
#include "skyps/parallel.hpp"
#include "skyps/pfm.hpp"
#include "skyps/solver.hpp"
#include "skyps/synthesis.hpp"

namespace fs = std::filesystem;
using namespace skyps;

namespace {

// Bad paths, missing inputs.
constexpr int kExitIo = 2;
// Anything else that stops a command.
constexpr int kExitFailure = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON config: top-level keys are global options, objects named after a
// subcommand hold that subcommand's options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->count() > 0)
        j[name] = opt->results().size() == 1 ? Json(opt->results()[0]) : Json(opt->results());
      else if (default_also && !opt->get_default_str().empty())
        j[name] = opt->get_default_str();
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      const Json s = Json::parse(to_config(sub, default_also, false, ""));
      if (!s.empty()) j[sub->get_name()] = s;
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json j;
    try {
      j = Json::parse(input);
    } catch (const Json::parse_error& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const Json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        walk(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
};

void require_out_dir(const fs::path& dir) {
  if (dir.empty() || !fs::is_directory(dir)) throw UsageError("output directory does not exist: " + dir.string());
}

void require_in_dir(const fs::path& dir, const char* what) {
  if (dir.empty() || !fs::is_directory(dir)) throw UsageError(std::string(what) + " directory does not exist: " + dir.string());
}

std::vector<double> parse_pattern(const std::string& text, std::size_t count) {
  std::vector<double> out;
  if (text.find(',') == std::string::npos) {
    for (char c : text) {
      if (c != '0' && c != '1') throw InvalidArgument("cloud pattern must be a string of 0/1 or comma-separated attenuations");
      out.push_back(c == '1' ? 1.0 : 0.0);
    }
  } else {
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  }
  if (out.size() != count) throw InvalidArgument("cloud pattern has " + std::to_string(out.size()) + " entries for " +
                                                 std::to_string(count) + " timestamps");
  return out;
}

std::string pattern_string(const std::vector<double>& att) {
  std::ostringstream os;
  for (std::size_t i = 0; i < att.size(); ++i) os << (i ? "," : "") << att[i];
  return os.str();
}

// --- sky-render -------------------------------------------------------------

struct SkyRenderArgs {
  double lat = 46.8;
  double lon = -71.2;
  std::string date = "2014-09-23";
  int timestamps = 8;
  double first_hour = 9.0;
  int width = 64;
  std::string pattern;
  SkyParams sky;
  fs::path out;
};

GeoTemporal make_geo(const SkyRenderArgs& a) {
  GeoTemporal g;
  g.latitude_deg = a.lat;
  g.longitude_deg = a.lon;
  g.date = parse_date(a.date);
  g.timestamps.clear();
  for (int k = 0; k < a.timestamps; ++k) g.timestamps.push_back(a.first_hour + k);
  g.validate();
  return g;
}

void add_geo_sky_flags(CLI::App* cmd, SkyRenderArgs& a) {
  cmd->add_option("--lat", a.lat, "latitude, degrees North")->capture_default_str();
  cmd->add_option("--lon", a.lon, "longitude, degrees East")->capture_default_str();
  cmd->add_option("--date", a.date, "YYYY-MM-DD")->capture_default_str();
  cmd->add_option("--timestamps", a.timestamps, "number of hourly captures")->capture_default_str();
  cmd->add_option("--first-hour", a.first_hour, "solar time of the first capture")->capture_default_str();
  cmd->add_option("--width", a.width, "environment map width (height is half)")->capture_default_str();
  cmd->add_option("--turbidity", a.sky.turbidity)->capture_default_str();
  cmd->add_option("--ground-albedo", a.sky.ground_albedo)->capture_default_str();
  cmd->add_option("--sun-radius-deg", a.sky.sun_disc_radius_deg)->capture_default_str();
  cmd->add_option("--sun-scale", a.sky.sun_radiance_scale, "solar disc radiance scale")->capture_default_str();
}

int cmd_sky_render(const SkyRenderArgs& a) {
  require_out_dir(a.out);
  const GeoTemporal geo = make_geo(a);
  a.sky.validate();
  if (a.width < 4 || a.width % 2) throw InvalidArgument("width must be even and at least 4");
  const int h = a.width / 2;
  const std::vector<double> att =
      a.pattern.empty() ? std::vector<double>(geo.timestamps.size(), 1.0) : parse_pattern(a.pattern, geo.timestamps.size());

  const std::vector<EnvironmentMap> envs = simulate_cloud_sequence(geo, a.sky, att, a.width, h);
  const double reference = clear_sun_reference(geo, a.sky, a.width, h);
  const double fraction = reference > 0.0 ? day_visibility_fraction(envs, reference) : 0.0;

  for (std::size_t t = 0; t < envs.size(); ++t) {
    LightingFrame f{envs[t], geo.timestamps[t], sun_position(geo, geo.timestamps[t]), att[t], geo, a.sky};
    write_lighting_frame(a.out, t, f);
  }
  write_json(a.out / "day.json", {{"visibility_fraction", fraction},
                                  {"class", std::string(to_string(classify_day(fraction)))},
                                  {"reference_sun_intensity", reference},
                                  {"attenuation", att},
                                  {"pattern", a.pattern.empty() ? pattern_string(att) : a.pattern},
                                  {"geo", to_json(geo)},
                                  {"sky", to_json(a.sky)},
                                  {"maps", envs.size()}});
  std::cout << "wrote " << envs.size() << " maps to " << a.out.string() << ", visibility " << fraction << " ("
            << to_string(classify_day(fraction)) << ")\n";
  return 0;
}

// --- lighting input helpers ------------------------------------------------

std::vector<EnvironmentMap> load_lighting(const fs::path& dir) {
  require_in_dir(dir, "lighting");
  std::vector<EnvironmentMap> envs = load_lighting_dir(dir);
  if (envs.empty()) throw UsageError("no sky_*.pfm maps in " + dir.string());
  return envs;
}

// Clear-sky reference re-rendered from the first sidecar, if it carries one.
std::optional<double> sidecar_reference(const fs::path& dir, int width, int height) {
  const auto maps = list_pfm(dir, "sky_");
  if (maps.empty()) return std::nullopt;
  fs::path side = maps.front();
  side.replace_extension(".json");
  const Json j = read_json(side);
  if (!j.contains("geo") || !j.contains("sky")) return std::nullopt;
  const double r = clear_sun_reference(geo_from_json(j.at("geo")), sky_params_from_json(j.at("sky")), width, height);
  return r > 0.0 ? std::optional<double>(r) : std::nullopt;
}

// --- classify-day -----------------------------------------------------------

struct ClassifyArgs {
  fs::path lighting;
  double fraction = -1.0;
  double reference = 0.0;
};

int cmd_classify_day(const ClassifyArgs& a) {
  double fraction = a.fraction;
  std::string source = "given";
  if (!a.lighting.empty()) {
    const auto envs = load_lighting(a.lighting);
    std::optional<double> ref;
    if (a.reference > 0.0) {
      ref = a.reference;
      source = "given";
    } else if ((ref = sidecar_reference(a.lighting, envs.front().width(), envs.front().height()))) {
      source = "clear_day";
    } else {
      source = "sequence_max";
    }
    fraction = day_visibility_fraction(envs, ref);
  } else if (fraction < 0.0) {
    throw UsageError("need --lighting or --fraction");
  }
  const Json out{{"visibility_fraction", fraction},
                 {"class", std::string(to_string(classify_day(fraction)))},
                 {"reference", source}};
  std::cout << out.dump() << '\n';
  return 0;
}

// --- mlv --------------------------------------------------------------------

struct MlvArgs {
  fs::path lighting;
  std::vector<double> normal{0.0, 0.0, 1.0};
  fs::path out;
};

int cmd_mlv(const MlvArgs& a) {
  if (!a.out.empty()) require_out_dir(a.out.parent_path().empty() ? fs::path(".") : a.out.parent_path());
  const auto envs = load_lighting(a.lighting);
  Vec3 n(a.normal.at(0), a.normal.at(1), a.normal.at(2));
  if (!(n.norm() > 0.0)) throw InvalidArgument("normal must be nonzero");
  n.normalize();
  const auto traj = mlv_trajectory(envs, n);

  std::ostringstream csv;
  csv << "t,dir_x,dir_y,dir_z,intensity,zero\n" << std::setprecision(10);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& s = traj[t];
    csv << t << ',' << s.direction.x() << ',' << s.direction.y() << ',' << s.direction.z() << ',' << s.intensity << ','
        << (s.zero ? 1 : 0) << '\n';
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(a.out);
    if (!(f << csv.str())) throw IoError("cannot write " + a.out.string());
  }
  return 0;
}

// --- conditioning-map -------------------------------------------------------

struct ConditioningArgs {
  fs::path lighting;
  double sigma = 0.01;
  double albedo = 1.0;
  double grid = 5.0;
  bool full_sphere = false;
  double max_ci = 15.0;
  fs::path out;
};

Json sphere_json(const SphereMap& map, const std::function<bool(double)>& flag) {
  Json samples = Json::array(), flagged = Json::array();
  double best = -std::numeric_limits<double>::infinity();
  const SphereSample* arg = nullptr;
  std::vector<double> finite;
  for (const auto& s : map.samples) {
    const Json v = std::isfinite(s.value) ? Json(s.value) : Json("inf");
    samples.push_back({{"azimuth_deg", s.azimuth_deg}, {"zenith_deg", s.zenith_deg}, {"value", v}});
    if (flag(s.value)) flagged.push_back({{"azimuth_deg", s.azimuth_deg}, {"zenith_deg", s.zenith_deg}, {"value", v}});
    if (std::isfinite(s.value)) finite.push_back(s.value);
    if (s.value > best) {
      best = s.value;
      arg = &s;
    }
  }
  Json summary{{"count", map.samples.size()}, {"finite", finite.size()}, {"flagged", flagged.size()}};
  if (!finite.empty()) {
    const Percentiles p = box_percentile(finite);
    summary["median"] = p.p50;
    summary["p25"] = p.p25;
    summary["p75"] = p.p75;
  }
  if (arg) {
    summary["max"] = std::isfinite(arg->value) ? Json(arg->value) : Json("inf");
    summary["argmax"] = {{"azimuth_deg", arg->azimuth_deg}, {"zenith_deg", arg->zenith_deg}};
  }
  return {{"step_deg", map.step_deg},
          {"full_sphere", map.full_sphere},
          {"summary", summary},
          {"flagged", flagged},
          {"samples", samples}};
}

int cmd_conditioning_map(const ConditioningArgs& a) {
  require_out_dir(a.out);
  const auto envs = load_lighting(a.lighting);
  if (envs.size() < 3)
    throw InvalidArgument("conditioning needs at least 3 environment maps, got " + std::to_string(envs.size()));

  const NoiseModel noise{a.sigma};
  const SphereMap ci = reconstructability_map(envs, noise, a.albedo, a.grid, a.full_sphere);
  const SphereMap gain = max_gain_map(envs, a.grid, a.full_sphere);

  write_sphere_csv(ci, a.out / "ci.csv");
  write_sphere_csv(gain, a.out / "gain.csv");
  Json cj = sphere_json(ci, [&](double v) { return !(v <= a.max_ci); });
  cj["sigma"] = a.sigma;
  cj["albedo"] = a.albedo;
  cj["max_ci_deg"] = a.max_ci;
  write_json(a.out / "ci.json", cj);
  Json gj = sphere_json(gain, [](double v) { return !(v <= kBadlyConditionedGain); });
  gj["badly_conditioned_gain"] = kBadlyConditionedGain;
  write_json(a.out / "gain.json", gj);
  std::cout << "conditioning over " << ci.samples.size() << " normals: median CI "
            << cj["summary"].value("median", std::numeric_limits<double>::quiet_NaN()) << " deg, "
            << cj["summary"]["flagged"] << " flagged\n";
  return 0;
}

// --- reconstruct ------------------------------------------------------------

struct ReconstructArgs {
  fs::path images;
  fs::path lighting;
  fs::path mask;
  fs::path gt;
  std::string method = "lsq";
  SolveOptions options;
  fs::path out;
};

std::vector<RgbImage> load_images(const fs::path& dir) {
  require_in_dir(dir, "image");
  std::vector<RgbImage> imgs;
  for (const auto& p : list_pfm(dir, "img_")) imgs.push_back(rgb_from_pfm(read_pfm(p)));
  if (imgs.empty()) throw UsageError("no img_*.pfm images in " + dir.string());
  return imgs;
}

int cmd_reconstruct(ReconstructArgs a) {
  require_out_dir(a.out);
  if (a.method == "lsq")
    a.options.method = SolveMethod::Lsq;
  else if (a.method == "ratio")
    a.options.method = SolveMethod::Ratio;
  else
    throw InvalidArgument("unknown method '" + a.method + "'");

  const auto images = load_images(a.images);
  const auto envs = load_lighting(a.lighting);
  if (images.size() != envs.size())
    throw InvalidArgument(std::to_string(images.size()) + " images but " + std::to_string(envs.size()) + " maps");
  const int w = images.front().width(), h = images.front().height();

  std::optional<NormalMap> gt;
  if (!a.gt.empty()) {
    if (!fs::is_regular_file(a.gt)) throw UsageError("ground truth not found: " + a.gt.string());
    gt = normals_from_pfm(read_pfm(a.gt));
  }
  Mask mask(w, h, 0);
  if (!a.mask.empty()) {
    if (!fs::is_regular_file(a.mask)) throw UsageError("mask not found: " + a.mask.string());
    const PfmImage m = read_pfm(a.mask);
    if (m.width != w || m.height != h) throw InvalidArgument("mask size differs from the images");
    for (std::size_t i = 0; i < mask.size(); ++i)
      for (int c = 0; c < m.channels; ++c) mask[i] |= m.data[i * m.channels + c] != 0.0f;
  } else if (gt) {
    mask = gt->mask;
  } else {
    for (const auto& img : images)
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] |= luminance(img[i]) > 0.0;
  }

  const Reconstruction rec = reconstruct_normal_map(images, envs, mask, a.options);
  write_pfm(a.out / "normals.pfm", to_pfm(rec.normals));

  std::ofstream csv(a.out / "conditioning.csv");
  if (!csv) throw IoError("cannot write conditioning.csv");
  csv << "x,y,lambda_max,ci_deg,flagged,converged,iterations,albedo,residual\n" << std::setprecision(8);
  std::size_t solved = 0, flagged = 0, nonconv = 0, undefined = 0;
  std::vector<double> gains;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      const PixelSolution& s = rec.pixels(x, y);
      csv << x << ',' << y << ',' << s.lambda_max << ',' << s.ci_deg << ',' << s.flagged << ',' << s.converged << ','
          << s.iterations << ',' << s.albedo << ',' << s.residual << '\n';
      if (!rec.normals.valid(x, y)) {
        ++undefined;
        continue;
      }
      ++solved;
      flagged += s.flagged;
      nonconv += !s.converged;
      if (std::isfinite(s.lambda_max)) gains.push_back(s.lambda_max);
    }
  if (!csv) throw IoError("failed writing conditioning.csv");

  Json summary{{"method", a.method},
               {"pixels", solved},
               {"undefined", undefined},
               {"flagged", flagged},
               {"nonconverged", nonconv},
               {"sigma", a.options.sigma},
               {"max_ci_deg", a.options.max_ci_deg},
               {"smoothing_weight", a.options.smoothing_weight}};
  if (!gains.empty()) summary["median_lambda_max"] = percentile(gains, 0.5);
  if (gt) {
    if (!gt->normals.same_shape(mask)) throw InvalidArgument("ground truth size differs from the images");
    const ErrorSummary e = summarize(angular_error_map(rec.normals, *gt, gt->mask), gt->mask);
    summary["error"] = {{"median_deg", e.median_deg}, {"mean_deg", e.mean_deg}, {"r30", e.r30},
                        {"p25", e.percentiles.p25},  {"p75", e.percentiles.p75}};
  }
  write_json(a.out / "summary.json", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

// --- gen-dataset ------------------------------------------------------------

struct GenArgs {
  DatasetConfig config;
  bool manifest_only = false;
  fs::path out;
};

int cmd_gen_dataset(GenArgs a, std::uint64_t seed) {
  require_out_dir(a.out);
  a.config.seed = seed;
  const Json m = generate_dataset(a.config, a.out, !a.manifest_only);
  std::size_t val = 0;
  for (const auto& s : m["scenes"]) val += s["split"] == "val";
  std::cout << m["scenes"].size() << " scenes (" << val << " val) in " << a.out.string() << '\n';
  return 0;
}

// --- extract-patches --------------------------------------------------------

struct PatchArgs {
  fs::path dataset;
  int patch = 16;
  int stride = 8;
  std::string split = "all";
  bool mirror = false;
  fs::path out;
};

int cmd_extract_patches(const PatchArgs& a) {
  require_out_dir(a.out);
  require_in_dir(a.dataset, "dataset");
  const fs::path manifest_path = a.dataset / "manifest.json";
  if (!fs::is_regular_file(manifest_path)) throw UsageError("no manifest.json in " + a.dataset.string());
  const Json manifest = read_json(manifest_path);

  std::map<std::string, std::vector<Patch>> by_split;
  int T = -1;
  for (const auto& s : manifest.at("scenes")) {
    const std::string split = s.at("split");
    if (a.split != "all" && split != a.split) continue;
    const fs::path dir = a.dataset / s.at("dir").get<std::string>();
    if (!fs::is_directory(dir)) throw UsageError("scene directory missing: " + dir.string());
    SceneRecord rec;
    for (const auto& p : list_pfm(dir, "img_")) rec.images.push_back(rgb_from_pfm(read_pfm(p)));
    rec.normals = normals_from_pfm(read_pfm(dir / "normals.pfm"));
    if (T < 0) T = static_cast<int>(rec.images.size());
    if (static_cast<int>(rec.images.size()) != T) throw InvalidArgument("scenes disagree on the image count");
    auto patches = extract_patches(rec, a.patch, a.stride);
    auto& dst = by_split[split];
    std::move(patches.begin(), patches.end(), std::back_inserter(dst));
    if (a.mirror) {
      auto mirrored = extract_patches(mirror_hemisphere(rec), a.patch, a.stride);
      std::move(mirrored.begin(), mirrored.end(), std::back_inserter(dst));
    }
  }
  if (T < 0) throw InvalidArgument("no scenes selected");
  for (const auto& [split, patches] : by_split) {
    write_patches(a.out / (split + "_patches.bin"), a.out / (split + "_patches.json"), patches, T, a.patch);
    std::cout << split << ": " << patches.size() << " patches\n";
  }
  return 0;
}

// --- evaluate ---------------------------------------------------------------

struct EvalArgs {
  fs::path est;
  fs::path gt;
  fs::path out;
};

int cmd_evaluate(const EvalArgs& a) {
  require_out_dir(a.out);
  require_in_dir(a.est, "estimate");
  require_in_dir(a.gt, "ground-truth");

  // (scene id, gt normals, estimated normals)
  std::vector<std::tuple<std::string, fs::path, fs::path>> pairs;
  if (fs::is_regular_file(a.gt / "normals.pfm")) {
    pairs.emplace_back(a.gt.filename().string(), a.gt / "normals.pfm", a.est / "normals.pfm");
  } else {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(a.gt))
      if (e.is_directory() && fs::is_regular_file(e.path() / "normals.pfm")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs)
      pairs.emplace_back(d.filename().string(), d / "normals.pfm", a.est / d.filename() / "normals.pfm");
  }
  if (pairs.empty()) throw UsageError("no ground-truth normals under " + a.gt.string());
  for (const auto& [id, g, e] : pairs)
    if (!fs::is_regular_file(e)) throw UsageError("missing estimate for " + id + ": " + e.string());

  std::vector<SceneScore> scores;
  std::vector<double> pooled, medians;
  for (const auto& [id, g, e] : pairs) {
    const NormalMap gt = normals_from_pfm(read_pfm(g));
    const NormalMap est = normals_from_pfm(read_pfm(e));
    const Grid<double> err = angular_error_map(est, gt, gt.mask);
    scores.push_back({id, summarize(err, gt.mask)});
    medians.push_back(scores.back().summary.median_deg);
    for (std::size_t i = 0; i < err.size(); ++i)
      if (gt.mask[i]) pooled.push_back(err[i]);
  }
  write_scores_csv(scores, a.out / "metrics.csv");
  const ErrorSummary all = summarize(pooled);
  const Json agg{{"scenes", scores.size()},
                 {"pixels", pooled.size()},
                 {"median_deg", all.median_deg},
                 {"mean_deg", all.mean_deg},
                 {"r30", all.r30},
                 {"p25", all.percentiles.p25},
                 {"p75", all.percentiles.p75},
                 {"median_of_scene_medians", percentile(medians, 0.5)}};
  write_json(a.out / "metrics.json", agg);
  std::cout << agg.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skyps: photometric stereo under natural outdoor lighting"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of option values; command-line flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();

  SkyRenderArgs sky_args;
  auto* sky = app.add_subcommand("sky-render", "render a day of clear or partly cloudy sky maps");
  add_geo_sky_flags(sky, sky_args);
  sky->add_option("--cloud-pattern", sky_args.pattern, "per-capture sun visibility, e.g. 10101010 or 1,0.5,0");
  sky->add_option("--out", sky_args.out, "existing output directory")->required();

  ClassifyArgs cls_args;
  auto* cls = app.add_subcommand("classify-day", "sun visibility fraction and day class");
  cls->add_option("--lighting", cls_args.lighting, "directory of sky_*.pfm maps");
  cls->add_option("--fraction", cls_args.fraction, "classify a given visibility fraction");
  cls->add_option("--reference", cls_args.reference, "reference sun intensity");

  MlvArgs mlv_args;
  auto* mlv = app.add_subcommand("mlv", "mean light vector trajectory for one normal");
  mlv->add_option("--lighting", mlv_args.lighting)->required();
  mlv->add_option("--normal", mlv_args.normal, "x y z")->expected(3)->capture_default_str();
  mlv->add_option("--out", mlv_args.out, "CSV file (stdout if omitted)");

  ConditioningArgs cond_args;
  auto* cond = app.add_subcommand("conditioning-map", "confidence-interval and noise-gain maps over normals");
  cond->add_option("--lighting", cond_args.lighting)->required();
  cond->add_option("--sigma", cond_args.sigma, "image noise")->capture_default_str();
  cond->add_option("--albedo", cond_args.albedo)->capture_default_str();
  cond->add_option("--grid", cond_args.grid, "grid step, degrees")->capture_default_str();
  cond->add_flag("--full-sphere", cond_args.full_sphere, "include normals facing away from the camera");
  cond->add_option("--max-ci", cond_args.max_ci, "flag normals whose interval exceeds this, degrees")->capture_default_str();
  cond->add_option("--out", cond_args.out)->required();

  ReconstructArgs rec_args;
  auto* rec = app.add_subcommand("reconstruct", "calibrated photometric stereo");
  rec->add_option("--images", rec_args.images, "directory of img_*.pfm")->required();
  rec->add_option("--lighting", rec_args.lighting, "directory of sky_*.pfm with sidecars")->required();
  rec->add_option("--mask", rec_args.mask, "PFM, nonzero = solve");
  rec->add_option("--gt", rec_args.gt, "ground-truth normals.pfm for an error report");
  rec->add_option("--method", rec_args.method, "lsq or ratio")->capture_default_str();
  rec->add_option("--max-iters", rec_args.options.max_iters)->capture_default_str();
  rec->add_option("--tol-deg", rec_args.options.tol_deg)->capture_default_str();
  rec->add_option("--smoothing", rec_args.options.smoothing_weight)->capture_default_str();
  rec->add_option("--smoothing-passes", rec_args.options.smoothing_passes)->capture_default_str();
  rec->add_option("--sigma", rec_args.options.sigma)->capture_default_str();
  rec->add_option("--max-ci", rec_args.options.max_ci_deg)->capture_default_str();
  rec->add_option("--noise-floor", rec_args.options.noise_floor)->capture_default_str();
  rec->add_option("--out", rec_args.out)->required();

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen-dataset", "synthetic multi-timestamp dataset");
  auto& dc = gen_args.config;
  gen->add_option("--locations", dc.n_locations)->capture_default_str();
  gen->add_option("--random-days", dc.n_random_days)->capture_default_str();
  gen->add_option("--lat-min", dc.latitude_min_deg)->capture_default_str();
  gen->add_option("--lat-max", dc.latitude_max_deg)->capture_default_str();
  gen->add_option("--year", dc.year)->capture_default_str();
  gen->add_option("--timestamps", dc.timestamps)->capture_default_str();
  gen->add_option("--first-hour", dc.first_hour)->capture_default_str();
  gen->add_option("--image-size", dc.image_size)->capture_default_str();
  gen->add_option("--patch", dc.patch_size)->capture_default_str();
  gen->add_option("--stride", dc.stride)->capture_default_str();
  gen->add_option("--scenes-per-pair", dc.scenes_per_pair)->capture_default_str();
  gen->add_option("--val-fraction", dc.val_fraction)->capture_default_str();
  gen->add_option("--env-width", dc.env_width)->capture_default_str();
  gen->add_option("--turbidity", dc.sky.turbidity)->capture_default_str();
  gen->add_flag("--manifest-only", gen_args.manifest_only, "plan the dataset without rendering");
  gen->add_option("--out", gen_args.out)->required();

  PatchArgs patch_args;
  auto* pat = app.add_subcommand("extract-patches", "export aligned training patches");
  pat->add_option("--dataset", patch_args.dataset, "directory holding manifest.json")->required();
  pat->add_option("--patch", patch_args.patch)->capture_default_str();
  pat->add_option("--stride", patch_args.stride)->capture_default_str();
  pat->add_option("--split", patch_args.split, "train, val or all")->capture_default_str();
  pat->add_flag("--mirror", patch_args.mirror, "also add the other-hemisphere mirror of every scene");
  pat->add_option("--out", patch_args.out)->required();

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "angular error against ground truth");
  ev->add_option("--est", eval_args.est, "estimated normals: a scene dir or a dataset-shaped tree")->required();
  ev->add_option("--gt", eval_args.gt, "ground truth: a scene dir or a dataset dir")->required();
  ev->add_option("--out", eval_args.out)->required();

  for (auto* sub : app.get_subcommands({})) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    set_thread_count(threads);
    if (*sky) return cmd_sky_render(sky_args);
    if (*cls) return cmd_classify_day(cls_args);
    if (*mlv) return cmd_mlv(mlv_args);
    if (*cond) return cmd_conditioning_map(cond_args);
    if (*rec) return cmd_reconstruct(rec_args);
    if (*gen) return cmd_gen_dataset(gen_args, seed);
    if (*pat) return cmd_extract_patches(patch_args);
    if (*ev) return cmd_evaluate(eval_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
