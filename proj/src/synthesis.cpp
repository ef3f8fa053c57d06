#include "skyps/synthesis.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include "skyps/parallel.hpp"
#include "skyps/pfm.hpp"

namespace fs = std::filesystem;

namespace skyps {

void DatasetConfig::validate() const {
  if (n_locations < 1 || n_random_days < 0 || timestamps < 1 || scenes_per_pair < 1)
    throw InvalidArgument("dataset counts must be positive");
  if (!(latitude_min_deg >= -90.0 && latitude_min_deg <= latitude_max_deg && latitude_max_deg <= 90.0))
    throw InvalidArgument("bad latitude range");
  if (n_random_days > 361) throw InvalidArgument("too many random days");
  if (!(first_hour >= 0.0 && first_hour + timestamps - 1 <= 24.0)) throw InvalidArgument("timestamps must fit in a day");
  if (image_size < 16) throw InvalidArgument("image size must be at least 16");
  if (patch_size < 1 || patch_size % 2 != 0) throw InvalidArgument("patch size must be even");
  if (stride < 1 || stride > patch_size) throw InvalidArgument("stride must be in [1, P]");
  if (patch_size > image_size) throw InvalidArgument("patch larger than the image");
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) throw InvalidArgument("val fraction must be in [0, 1]");
  if (env_width < 4 || env_width % 2 != 0) throw InvalidArgument("env width must be even and >= 4");
  sky.validate();
}

Json to_json(const DatasetConfig& c) {
  return {{"n_locations", c.n_locations},
          {"latitude_min_deg", c.latitude_min_deg},
          {"latitude_max_deg", c.latitude_max_deg},
          {"n_random_days", c.n_random_days},
          {"year", c.year},
          {"timestamps", c.timestamps},
          {"first_hour", c.first_hour},
          {"image_size", c.image_size},
          {"patch_size", c.patch_size},
          {"stride", c.stride},
          {"scenes_per_pair", c.scenes_per_pair},
          {"val_fraction", c.val_fraction},
          {"env_width", c.env_width},
          {"sky", to_json(c.sky)},
          {"seed", c.seed}};
}

DatasetConfig dataset_config_from_json(const Json& j) {
  DatasetConfig c;
  c.n_locations = j.value("n_locations", c.n_locations);
  c.latitude_min_deg = j.value("latitude_min_deg", c.latitude_min_deg);
  c.latitude_max_deg = j.value("latitude_max_deg", c.latitude_max_deg);
  c.n_random_days = j.value("n_random_days", c.n_random_days);
  c.year = j.value("year", c.year);
  c.timestamps = j.value("timestamps", c.timestamps);
  c.first_hour = j.value("first_hour", c.first_hour);
  c.image_size = j.value("image_size", c.image_size);
  c.patch_size = j.value("patch_size", c.patch_size);
  c.stride = j.value("stride", c.stride);
  c.scenes_per_pair = j.value("scenes_per_pair", c.scenes_per_pair);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.env_width = j.value("env_width", c.env_width);
  if (j.contains("sky")) c.sky = sky_params_from_json(j.at("sky"));
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<ShapeSpec> train_shapes() {
  return {{ShapeKind::Sphere, 0}, {ShapeKind::Cube, 0}, {ShapeKind::Cone, 0}, {ShapeKind::Blob, 0}, {ShapeKind::Blob, 1}};
}

std::vector<ShapeSpec> val_shapes() { return {{ShapeKind::Icosahedron, 0}, {ShapeKind::Blob, 2}}; }

double sample_triangular(Rng& rng, double lo, double mode, double hi) {
  if (!(lo <= mode && mode <= hi && lo < hi)) throw InvalidArgument("bad triangular parameters");
  std::vector<double> knots{lo}, weights{lo == mode ? 1.0 : 0.0};
  if (lo < mode && mode < hi) {
    knots.push_back(mode);
    weights.push_back(1.0);
  }
  knots.push_back(hi);
  weights.push_back(mode == hi ? 1.0 : 0.0);
  std::piecewise_linear_distribution<double> d(knots.begin(), knots.end(), weights.begin());
  return d(rng);
}

Rgb hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  Rgb rgb;
  switch (std::min(static_cast<int>(hp), 5)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return (rgb + (v - c)).cwiseMax(0.0).cwiseMin(1.0);
}

BRDFParams sample_material(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BRDFParams b;
  const double h = u(rng);
  const double s = sample_triangular(rng, 0.0, 0.0, 1.0);
  const double v = sample_triangular(rng, 0.0, 0.75, 1.0);
  b.base_color = hsv_to_rgb(h, s, v);
  b.roughness = sample_triangular(rng, 0.2, 0.4, 1.0);
  b.mix = u(rng);
  return b;
}

namespace {

using std::chrono::day;
using std::chrono::month;
using std::chrono::year;

std::vector<double> hourly(const DatasetConfig& c) {
  std::vector<double> t;
  for (int k = 0; k < c.timestamps; ++k) t.push_back(c.first_hour + k);
  return t;
}

}  // namespace

std::vector<GeoTemporal> sample_geotemporal(Rng& rng, const DatasetConfig& config) {
  config.validate();
  const year y{config.year};
  const std::array<std::chrono::year_month_day, 4> fixed{y / month{3} / day{20}, y / month{6} / day{21},
                                                         y / month{9} / day{23}, y / month{12} / day{21}};
  const std::chrono::sys_days jan1 = y / month{1} / day{1};
  const int days_in_year = y.is_leap() ? 366 : 365;

  std::uniform_real_distribution<double> lat(config.latitude_min_deg, config.latitude_max_deg);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  std::uniform_int_distribution<int> doy(0, days_in_year - 1);

  std::vector<GeoTemporal> out;
  for (int l = 0; l < config.n_locations; ++l) {
    GeoTemporal base;
    base.latitude_deg = lat(rng);
    base.longitude_deg = lon(rng);
    base.timestamps = hourly(config);

    std::set<int> taken;
    for (const auto& f : fixed) taken.insert(static_cast<int>((std::chrono::sys_days{f} - jan1).count()));
    std::vector<std::chrono::year_month_day> days;
    while (static_cast<int>(days.size()) < config.n_random_days) {
      const int d = doy(rng);
      if (!taken.insert(d).second) continue;
      days.emplace_back(jan1 + std::chrono::days{d});
    }
    days.insert(days.end(), fixed.begin(), fixed.end());
    for (const auto& d : days) {
      GeoTemporal g = base;
      g.date = d;
      out.push_back(g);
    }
  }
  return out;
}

Rng scene_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

namespace {

std::string scene_id(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05llu", static_cast<unsigned long long>(index));
  return buf;
}

std::string numbered(const char* prefix, std::size_t i, const char* ext) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%02zu%s", prefix, i, ext);
  return buf;
}

}  // namespace

std::vector<ScenePlan> plan_dataset(const DatasetConfig& config) {
  config.validate();
  Rng pairs_rng = scene_rng(config.seed, ~std::uint64_t{0});
  const std::vector<GeoTemporal> pairs = sample_geotemporal(pairs_rng, config);
  const auto train = train_shapes(), val = val_shapes();

  std::vector<ScenePlan> plans;
  plans.reserve(static_cast<std::size_t>(config.scene_count()));
  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (int k = 0; k < config.scenes_per_pair; ++k) {
      ScenePlan s;
      s.index = p * static_cast<std::size_t>(config.scenes_per_pair) + static_cast<std::size_t>(k);
      Rng rng = scene_rng(config.seed, s.index);
      s.id = scene_id(s.index);
      const bool is_val = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.val_fraction;
      s.split = is_val ? "val" : "train";
      const auto& kinds = is_val ? val : train;
      s.shape = kinds[std::uniform_int_distribution<std::size_t>(0, kinds.size() - 1)(rng)];
      s.brdf = sample_material(rng);
      s.geo = pairs[p];
      for (double t : s.geo.timestamps) s.sun_dirs.push_back(sun_position(s.geo, t));
      plans.push_back(std::move(s));
    }
  return plans;
}

SceneRecord render_scene(const ScenePlan& plan, const DatasetConfig& config) {
  SceneRecord rec;
  rec.plan = plan;
  // Shape draws come after the plan's draws on the same stream.
  Rng rng = scene_rng(config.seed, plan.index);
  rng.discard(1024);
  rec.normals = gen_normal_map(plan.shape, rng, config.image_size);

  const int w = config.env_width, h = config.env_width / 2;
  for (const Vec3& sun : plan.sun_dirs) {
    if (sun.z() <= 0.0)
      rec.envs.emplace_back(w, h, Rgb::Zero());
    else
      rec.envs.push_back(render_sky(sun, config.sky, w, h));
  }
  for (const auto& env : rec.envs) rec.images.push_back(render_image(rec.normals, plan.brdf, env, default_view_dir()));
  return rec;
}

Json manifest_json(const DatasetConfig& config, const std::vector<ScenePlan>& plans) {
  Json scenes = Json::array();
  for (const auto& s : plans) {
    Json suns = Json::array();
    for (const auto& d : s.sun_dirs) suns.push_back(to_json(d));
    scenes.push_back({{"id", s.id},
                      {"split", s.split},
                      {"dir", s.id},
                      {"kind", s.shape.label()},
                      {"brdf", to_json(s.brdf)},
                      {"geo", to_json(s.geo)},
                      {"timestamps", s.geo.timestamps},
                      {"sun_dirs", suns}});
  }
  return {{"scenes", scenes}, {"config", to_json(config)}, {"seed", config.seed}};
}

Json generate_dataset(const DatasetConfig& config, const fs::path& out_dir, bool render) {
  config.validate();
  if (!fs::is_directory(out_dir)) throw IoError("output directory does not exist: " + out_dir.string());
  const std::vector<ScenePlan> plans = plan_dataset(config);
  const Json manifest = manifest_json(config, plans);

  if (render) {
    parallel_for(plans.size(), [&](std::size_t i) {
      const ScenePlan& plan = plans[i];
      try {
        const SceneRecord rec = render_scene(plan, config);
        const fs::path dir = out_dir / plan.id;
        fs::create_directories(dir);
        for (std::size_t t = 0; t < rec.images.size(); ++t)
          write_pfm(dir / numbered("img_", t, ".pfm"), to_pfm(rec.images[t]));
        write_pfm(dir / "normals.pfm", to_pfm(rec.normals));
        Json meta = manifest["scenes"][i];
        meta["sky"] = to_json(config.sky);
        meta["image_size"] = config.image_size;
        meta["env_width"] = config.env_width;
        write_json(dir / "meta.json", meta);
      } catch (const std::exception& e) {
        throw IoError(plan.id + ": " + e.what());
      }
    });
  }
  write_json(out_dir / "manifest.json", manifest);
  return manifest;
}

namespace {

template <typename T>
Grid<T> flip_lr(const Grid<T>& g) {
  Grid<T> out(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) out(g.width() - 1 - x, y) = g(x, y);
  return out;
}

Vec3 mirror_x(Vec3 v) {
  v.x() = -v.x();
  return v;
}

}  // namespace

SceneRecord mirror_hemisphere(const SceneRecord& scene) {
  SceneRecord out;
  out.plan = scene.plan;
  std::reverse(out.plan.sun_dirs.begin(), out.plan.sun_dirs.end());
  for (auto& d : out.plan.sun_dirs) d = mirror_x(d);
  std::reverse(out.plan.geo.timestamps.begin(), out.plan.geo.timestamps.end());

  out.normals.normals = flip_lr(scene.normals.normals);
  out.normals.mask = flip_lr(scene.normals.mask);
  for (auto& n : out.normals.normals.data()) n = mirror_x(n);

  for (auto it = scene.images.rbegin(); it != scene.images.rend(); ++it) out.images.push_back(flip_lr(*it));
  for (auto it = scene.envs.rbegin(); it != scene.envs.rend(); ++it) {
    // column x <-> w-1-x maps azimuth phi to 2pi - phi, i.e. negates East
    std::vector<Rgb> px(it->pixel_count());
    for (int y = 0; y < it->height(); ++y)
      for (int x = 0; x < it->width(); ++x)
        px[static_cast<std::size_t>(y) * it->width() + (it->width() - 1 - x)] = it->radiance(x, y);
    out.envs.emplace_back(it->width(), it->height(), std::move(px));
  }
  return out;
}

std::vector<Patch> extract_patches(const std::vector<RgbImage>& images, const NormalMap& normals, int P, int stride) {
  if (P < 1 || stride < 1) throw InvalidArgument("patch size and stride must be positive");
  const int w = normals.width(), h = normals.height();
  if (P > w || P > h) throw InvalidArgument("patch size exceeds the image");
  for (const auto& img : images)
    if (!img.same_shape(normals.normals)) throw InvalidArgument("image and normal map shapes differ");

  std::vector<Patch> out;
  for (int y0 = 0; y0 + P <= h; y0 += stride)
    for (int x0 = 0; x0 + P <= w; x0 += stride) {
      bool inside = true;
      for (int y = y0; y < y0 + P && inside; ++y)
        for (int x = x0; x < x0 + P && inside; ++x) inside = normals.valid(x, y);
      if (!inside) continue;
      Patch p;
      p.x = x0;
      p.y = y0;
      for (const auto& img : images) {
        std::vector<Rgb> crop;
        crop.reserve(static_cast<std::size_t>(P) * P);
        for (int y = y0; y < y0 + P; ++y)
          for (int x = x0; x < x0 + P; ++x) crop.push_back(img(x, y));
        p.images.push_back(std::move(crop));
      }
      for (int y = y0; y < y0 + P; ++y)
        for (int x = x0; x < x0 + P; ++x) p.normals.push_back(normals.normals(x, y));
      out.push_back(std::move(p));
    }
  return out;
}

std::vector<Patch> extract_patches(const SceneRecord& scene, int P, int stride) {
  return extract_patches(scene.images, scene.normals, P, stride);
}

namespace {

void put_f32(std::vector<char>& buf, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((bits >> (8 * k)) & 0xffu));
}

}  // namespace

void write_patches(const fs::path& bin_path, const fs::path& header_path, const std::vector<Patch>& patches, int T,
                   int P) {
  std::vector<char> buf;
  buf.reserve(patches.size() * static_cast<std::size_t>(T + 1) * P * P * 3 * 4);
  for (const auto& p : patches) {
    if (static_cast<int>(p.images.size()) != T) throw InvalidArgument("patch has the wrong image count");
    for (const auto& crop : p.images)
      for (const auto& c : crop)
        for (int k = 0; k < 3; ++k) put_f32(buf, c[k]);
    for (const auto& n : p.normals)
      for (int k = 0; k < 3; ++k) put_f32(buf, n[k]);
  }
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + bin_path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + bin_path.string());

  Json origins = Json::array();
  for (const auto& p : patches) origins.push_back({p.x, p.y});
  write_json(header_path, {{"count", patches.size()},
                           {"T", T},
                           {"P", P},
                           {"channels", 3},
                           {"dtype", "f32-le"},
                           {"layout", "per patch: images[T][P][P][3] then normals[P][P][3]"},
                           {"data", bin_path.filename().string()},
                           {"origins", origins}});
}

}  // namespace skyps
