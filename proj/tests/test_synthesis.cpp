#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "oracles.hpp"
#include "skyps/synthesis.hpp"

using namespace skyps;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

DatasetConfig tiny_config() {
  DatasetConfig c;
  c.n_locations = 1;
  c.n_random_days = 1;
  c.scenes_per_pair = 1;
  c.image_size = 16;
  c.env_width = 16;
  c.patch_size = 8;
  c.stride = 4;
  c.val_fraction = 0.4;
  c.seed = 5;
  return c;
}

NormalMap full_normals(int size) {
  NormalMap nm(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) nm.set(x, y, Vec3(0, -1, 0));
  return nm;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("hsv conversion") {
  CHECK((hsv_to_rgb(0.0, 1.0, 1.0) - Rgb(1, 0, 0)).abs().maxCoeff() < 1e-12);
  CHECK((hsv_to_rgb(1.0 / 3.0, 1.0, 1.0) - Rgb(0, 1, 0)).abs().maxCoeff() < 1e-12);
  CHECK((hsv_to_rgb(2.0 / 3.0, 1.0, 0.5) - Rgb(0, 0, 0.5)).abs().maxCoeff() < 1e-12);
  CHECK((hsv_to_rgb(0.3, 0.0, 0.7) - Rgb::Constant(0.7)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("material sampling distributions") {
  Rng rng(123);
  const int n = 100000;
  std::vector<double> v, s, rough, mix;
  for (int i = 0; i < n; ++i) {
    const auto b = sample_material(rng);
    CHECK_NOTHROW(b.validate());
    const double mx = b.base_color.maxCoeff(), mn = b.base_color.minCoeff();
    REQUIRE(mn >= 0.0);
    REQUIRE(mx <= 1.0);
    REQUIRE(b.roughness >= 0.2);
    REQUIRE(b.roughness <= 1.0);
    REQUIRE(b.mix >= 0.0);
    REQUIRE(b.mix <= 1.0);
    v.push_back(mx);
    if (mx > 0.0) s.push_back((mx - mn) / mx);
    rough.push_back(b.roughness);
    mix.push_back(b.mix);
  }
  CHECK(oracle::ks_distance(v, [](double x) { return oracle::triangular_cdf(x, 0.0, 0.75, 1.0); }) < 0.01);
  CHECK(oracle::ks_distance(s, [](double x) { return oracle::triangular_cdf(x, 0.0, 0.0, 1.0); }) < 0.01);
  CHECK(oracle::ks_distance(rough, [](double x) { return oracle::triangular_cdf(x, 0.2, 0.4, 1.0); }) < 0.01);
  CHECK(oracle::ks_distance(mix, [](double x) { return std::clamp(x, 0.0, 1.0); }) < 0.01);

  // empirical mode of V from a 20-bin histogram
  std::vector<int> hist(20, 0);
  for (double x : v) ++hist[std::min(19, static_cast<int>(x * 20))];
  const int mode_bin = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  CHECK(std::abs((mode_bin + 0.5) / 20.0 - 0.75) <= 0.05);
}

TEST_CASE("material sampling is deterministic") {
  Rng a(77), b(77);
  for (int i = 0; i < 1000; ++i) {
    const auto x = sample_material(a), y = sample_material(b);
    CHECK((x.base_color == y.base_color).all());
    CHECK(x.roughness == y.roughness);
    CHECK(x.mix == y.mix);
  }
}

TEST_CASE("triangular sampling handles degenerate modes") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = sample_triangular(rng, 0.0, 0.0, 1.0), b = sample_triangular(rng, 0.0, 1.0, 1.0);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
  }
  CHECK_THROWS_AS(sample_triangular(rng, 1.0, 0.5, 2.0), InvalidArgument);
}

TEST_CASE("geo-temporal sampling") {
  Rng rng(9);
  const DatasetConfig c;
  const auto pairs = sample_geotemporal(rng, c);
  CHECK(pairs.size() == 110);
  CHECK(c.pair_count() == 110);
  using namespace std::chrono;
  const std::set<std::pair<unsigned, unsigned>> fixed{{3, 20}, {6, 21}, {9, 23}, {12, 21}};
  for (std::size_t l = 0; l < 11; ++l) {
    std::set<int> days;
    std::set<std::pair<unsigned, unsigned>> found;
    for (std::size_t k = 0; k < 10; ++k) {
      const auto& g = pairs[l * 10 + k];
      CHECK(g.latitude_deg >= 0.0);
      CHECK(g.latitude_deg <= 56.0);
      CHECK(g.latitude_deg == pairs[l * 10].latitude_deg);
      CHECK(g.timestamps.size() == 8);
      CHECK(g.timestamps.front() == 9.0);
      CHECK(g.timestamps.back() == 16.0);
      CHECK(int(g.date.year()) == 2014);
      days.insert(static_cast<int>(sys_days{g.date}.time_since_epoch().count()));
      const std::pair<unsigned, unsigned> md{unsigned(g.date.month()), unsigned(g.date.day())};
      if (fixed.count(md)) found.insert(md);
    }
    CHECK(days.size() == 10);
    CHECK(found == fixed);
  }
}

TEST_CASE("configuration checks") {
  DatasetConfig c;
  c.patch_size = 15;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.stride = 17;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.n_locations = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.latitude_max_deg = 95.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  const auto back = dataset_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("dataset plan") {
  DatasetConfig c;
  c.seed = 17;
  const auto plans = plan_dataset(c);
  CHECK(plans.size() == static_cast<std::size_t>(c.scene_count()));
  std::set<std::string> train_kinds, val_kinds, ids;
  for (const auto& p : plans) {
    ids.insert(p.id);
    (p.split == "train" ? train_kinds : val_kinds).insert(p.shape.label());
    CHECK(p.sun_dirs.size() == 8);
  }
  CHECK(ids.size() == plans.size());
  CHECK_FALSE(val_kinds.empty());
  for (const auto& k : val_kinds) CHECK(train_kinds.count(k) == 0);

  const auto again = plan_dataset(c);
  CHECK(manifest_json(c, again).dump() == manifest_json(c, plans).dump());
  c.seed = 18;
  CHECK(manifest_json(c, plan_dataset(c)).dump() != manifest_json(c, plans).dump());
}

TEST_CASE("dataset generation writes complete scenes") {
  const auto c = tiny_config();
  const fs::path a = fresh_dir("skyps_ds_a"), b = fresh_dir("skyps_ds_b");
  const Json manifest = generate_dataset(c, a);
  generate_dataset(c, b);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(manifest.at("scenes").size() == 5);
  for (const auto& s : manifest.at("scenes")) {
    const fs::path dir = a / s.at("dir").get<std::string>();
    int imgs = 0, others = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("img_", 0) == 0 && e.path().extension() == ".pfm")
        ++imgs;
      else
        ++others;
    }
    CHECK(imgs == 8);
    CHECK(others == 2);
    CHECK(fs::exists(dir / "normals.pfm"));
    CHECK(fs::exists(dir / "meta.json"));
    for (const char* key : {"id", "split", "dir", "kind", "brdf", "geo", "timestamps", "sun_dirs"}) CHECK(s.contains(key));
  }
  CHECK(manifest.contains("config"));
  CHECK(manifest.contains("seed"));
  CHECK_THROWS_AS(generate_dataset(c, a / "missing"), IoError);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("rendered scenes are finite and nonnegative with unit normals") {
  const auto c = tiny_config();
  for (const auto& plan : plan_dataset(c)) {
    const auto rec = render_scene(plan, c);
    CHECK(rec.images.size() == 8);
    for (const auto& img : rec.images)
      for (const auto& px : img.data()) {
        CHECK(px.isFinite().all());
        CHECK((px >= 0.0).all());
      }
    for (int y = 0; y < c.image_size; ++y)
      for (int x = 0; x < c.image_size; ++x)
        if (rec.normals.valid(x, y)) CHECK(std::abs(rec.normals.normals(x, y).norm() - 1.0) <= 1e-6);
  }
}

TEST_CASE("patch extraction counts") {
  const auto nm = full_normals(256);
  const std::vector<RgbImage> imgs(2, RgbImage(256, 256, Rgb::Zero()));
  CHECK(extract_patches(imgs, nm, 16, 8).size() == 961);
  CHECK(extract_patches(imgs, nm, 16, 16).size() == 256);
  const NormalMap empty(256, 256);
  CHECK(extract_patches(imgs, empty, 16, 8).empty());
  CHECK_THROWS_AS(extract_patches(imgs, nm, 300, 8), InvalidArgument);

  // a hole removes exactly the patches that cover it
  auto holed = nm;
  holed.mask(100, 100) = 0;
  const auto ps = extract_patches(imgs, holed, 16, 8);
  int covering = 0;
  for (int y = 0; y + 16 <= 256; y += 8)
    for (int x = 0; x + 16 <= 256; x += 8) covering += x <= 100 && 100 < x + 16 && y <= 100 && 100 < y + 16;
  CHECK(ps.size() == static_cast<std::size_t>(961 - covering));
}

TEST_CASE("patch export layout") {
  const int size = 16, P = 8, T = 3;
  auto nm = full_normals(size);
  nm.normals(3, 2) = Vec3(0.6, -0.8, 0.0);
  std::vector<RgbImage> imgs;
  for (int t = 0; t < T; ++t) {
    RgbImage img(size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) img(x, y) = Rgb(t, x, y * 0.5);
    imgs.push_back(img);
  }
  const auto patches = extract_patches(imgs, nm, P, 8);
  REQUIRE(patches.size() == 4);
  const fs::path dir = fresh_dir("skyps_patches");
  write_patches(dir / "p.bin", dir / "p.json", patches, T, P);
  const Json header = read_json(dir / "p.json");
  CHECK(header.at("count") == 4);
  CHECK(header.at("T") == T);
  CHECK(header.at("P") == P);
  CHECK(header.at("channels") == 3);
  CHECK(header.at("dtype") == "f32-le");
  const std::string bytes = slurp(dir / "p.bin");
  const std::size_t per = static_cast<std::size_t>(T * P * P * 3 + P * P * 3);
  REQUIRE(bytes.size() == 4 * per * 4);
  auto f32 = [&](std::size_t idx) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + 4 * idx;
    const std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
  };
  // first patch at (0,0): image t, pixel (x=3,y=2)
  for (int t = 0; t < T; ++t) {
    const std::size_t base = static_cast<std::size_t>(((t * P + 2) * P + 3) * 3);
    CHECK(f32(base + 0) == float(t));
    CHECK(f32(base + 1) == 3.0f);
    CHECK(f32(base + 2) == 1.0f);
  }
  const std::size_t nbase = static_cast<std::size_t>(T * P * P * 3 + (2 * P + 3) * 3);
  CHECK(f32(nbase + 0) == 0.6f);
  CHECK(f32(nbase + 1) == -0.8f);
  CHECK(f32(nbase + 2) == 0.0f);
  fs::remove_all(dir);
}

TEST_CASE("hemisphere mirroring is an exact involution") {
  auto c = tiny_config();
  const auto plans = plan_dataset(c);
  const auto rec = render_scene(plans.front(), c);
  const auto once = mirror_hemisphere(rec);
  const auto twice = mirror_hemisphere(once);
  REQUIRE(twice.images.size() == rec.images.size());
  for (std::size_t t = 0; t < rec.images.size(); ++t) {
    CHECK(oracle::same_pixels(twice.images[t].data(), rec.images[t].data()));
    CHECK(oracle::same_pixels(twice.envs[t].radiance(), rec.envs[t].radiance()));
  }
  CHECK(twice.normals.mask.data() == rec.normals.mask.data());
  CHECK(twice.normals.normals.data() == rec.normals.normals.data());
  CHECK(twice.plan.geo.timestamps == rec.plan.geo.timestamps);
  CHECK(twice.plan.sun_dirs == rec.plan.sun_dirs);

  const int s = c.image_size;
  const std::size_t T = rec.images.size();
  for (std::size_t t = 0; t < T; ++t)
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) CHECK((once.images[t](x, y) == rec.images[T - 1 - t](s - 1 - x, y)).all());
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const Vec3 a = once.normals.normals(x, y), b = rec.normals.normals(s - 1 - x, y);
      CHECK(a == Vec3(-b.x(), b.y(), b.z()));
    }
}

TEST_CASE("mirrored scenes are rendered consistently") {
  // rendering the mirrored normals under the mirrored skies reproduces the mirrored images
  auto c = tiny_config();
  const auto rec = render_scene(plan_dataset(c).front(), c);
  const auto m = mirror_hemisphere(rec);
  for (std::size_t t = 0; t < m.envs.size(); ++t) {
    const auto img = render_image(m.normals, m.plan.brdf, m.envs[t], default_view_dir());
    for (std::size_t i = 0; i < img.size(); ++i)
      CHECK((img[i] - m.images[t][i]).abs().maxCoeff() <= 1e-9 * (1.0 + m.images[t][i].abs().maxCoeff()));
  }
}

}  // TEST_SUITE
