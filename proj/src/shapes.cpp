#include "skyps/shapes.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

namespace skyps {

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "sphere") return ShapeKind::Sphere;
  if (name == "cube") return ShapeKind::Cube;
  if (name == "icosahedron") return ShapeKind::Icosahedron;
  if (name == "cone") return ShapeKind::Cone;
  if (name == "blob") return ShapeKind::Blob;
  throw InvalidArgument("unknown shape kind '" + std::string(name) + "'");
}

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cube: return "cube";
    case ShapeKind::Icosahedron: return "icosahedron";
    case ShapeKind::Cone: return "cone";
    case ShapeKind::Blob: return "blob";
  }
  return "unknown";
}

std::string ShapeSpec::label() const {
  std::string s(to_string(kind));
  if (kind == ShapeKind::Blob) s += std::to_string(family);
  return s;
}

ShapeSpec ShapeSpec::parse(std::string_view label) {
  if (label.starts_with("blob") && label.size() > 4) {
    const int f = label[4] - '0';
    if (label.size() != 5 || f < 0 || f >= kBlobFamilies) throw InvalidArgument("unknown blob family in '" + std::string(label) + "'");
    return {ShapeKind::Blob, f};
  }
  return {parse_shape_kind(label), 0};
}

Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng));
  } while (q.norm() < 1e-9);
  return q.normalized().toRotationMatrix();
}

namespace {

constexpr double kFacing = 1e-9;

double pixel_x(int c, int size) { return 2.0 * (c + 0.5) / size - 1.0; }
double pixel_z(int r, int size) { return 1.0 - 2.0 * (r + 0.5) / size; }

void store(NormalMap& out, int c, int r, Vec3 n) {
  n.normalize();
  if (n.allFinite() && n.y() < -kFacing) out.set(c, r, n);
}

struct Plane {
  Vec3 n;  // outward
  double d;
};

// Entry point of the ray o + t*dir into the intersection of half-spaces n.p <= d.
std::optional<Vec3> convex_entry(const std::vector<Plane>& planes, const Vec3& o, const Vec3& dir) {
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  Vec3 normal = Vec3::Zero();
  for (const auto& p : planes) {
    const double nd = p.n.dot(dir);
    const double dist = p.d - p.n.dot(o);
    if (std::abs(nd) < 1e-15) {
      if (dist < 0.0) return std::nullopt;
      continue;
    }
    const double t = dist / nd;
    if (nd < 0.0) {
      if (t > t_in) {
        t_in = t;
        normal = p.n;
      }
    } else {
      t_out = std::min(t_out, t);
    }
  }
  if (!(t_in <= t_out)) return std::nullopt;
  return normal;
}

NormalMap polytope(std::vector<Plane> planes, Rng& rng, int size) {
  const Mat3 R = random_rotation(rng);
  for (auto& p : planes) p.n = R * p.n;
  NormalMap out(size, size);
  const Vec3 dir(0.0, 1.0, 0.0);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const Vec3 o(pixel_x(c, size), -10.0, pixel_z(r, size));
      if (const auto n = convex_entry(planes, o, dir)) store(out, c, r, *n);
    }
  return out;
}

std::vector<Plane> cube_planes() {
  std::vector<Plane> p;
  for (int a = 0; a < 3; ++a)
    for (double s : {-1.0, 1.0}) {
      Vec3 n = Vec3::Zero();
      n[a] = s;
      p.push_back({n, 0.5});
    }
  return p;
}

// Face normals of an icosahedron are the vertices of a dodecahedron.
std::vector<Plane> icosahedron_planes() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) {
      for (double c : {-1.0, 1.0}) v.emplace_back(a, b, c);
      v.emplace_back(0.0, a / phi, b * phi);
      v.emplace_back(a / phi, b * phi, 0.0);
      v.emplace_back(a * phi, 0.0, b / phi);
    }
  std::vector<Plane> p;
  for (const auto& n : v) p.push_back({n.normalized(), 0.7});
  return p;
}

// Solid cone, apex at +h_top on its axis, base disc at -h_base. The local
// origin is the centroid.
NormalMap cone(Rng& rng, int size) {
  constexpr double h_top = 0.9, h_base = 0.3, radius = 0.5;
  constexpr double k = radius / (h_top + h_base);
  const Mat3 R = random_rotation(rng);
  const Mat3 Rt = R.transpose();
  NormalMap out(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const Vec3 o = Rt * Vec3(pixel_x(c, size), -10.0, pixel_z(r, size));
      const Vec3 d = Rt * Vec3(0.0, 1.0, 0.0);
      double best = std::numeric_limits<double>::infinity();
      Vec3 normal = Vec3::Zero();

      // lateral: x^2 + y^2 = k^2 (h_top - z)^2
      const double w = h_top - o.z();
      const double A = d.x() * d.x() + d.y() * d.y() - k * k * d.z() * d.z();
      const double B = 2.0 * (o.x() * d.x() + o.y() * d.y() + k * k * w * d.z());
      const double C = o.x() * o.x() + o.y() * o.y() - k * k * w * w;
      std::array<double, 2> roots{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
      if (std::abs(A) > 1e-14) {
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
          const double s = std::sqrt(disc);
          roots = {(-B - s) / (2.0 * A), (-B + s) / (2.0 * A)};
        }
      } else if (std::abs(B) > 1e-14) {
        roots[0] = -C / B;
      }
      for (double t : roots) {
        if (!std::isfinite(t) || t >= best) continue;
        const Vec3 p = o + t * d;
        if (p.z() < -h_base || p.z() > h_top) continue;
        const double rho = std::hypot(p.x(), p.y());
        if (rho < 1e-12) continue;
        const Vec3 n = Vec3(p.x() / rho, p.y() / rho, k).normalized();
        if (n.dot(d) >= 0.0) continue;
        best = t;
        normal = n;
      }
      // base cap
      if (std::abs(d.z()) > 1e-14) {
        const double t = (-h_base - o.z()) / d.z();
        const Vec3 p = o + t * d;
        if (t < best && std::hypot(p.x(), p.y()) <= radius && d.z() > 0.0) {
          best = t;
          normal = Vec3(0.0, 0.0, -1.0);
        }
      }
      if (std::isfinite(best)) store(out, c, r, R * normal);
    }
  return out;
}

// Dome plus random cosine bumps, seen as a height field towards the camera.
NormalMap blob(int family, Rng& rng, int size) {
  constexpr double radius = 0.9;
  constexpr int bumps = 8;
  const double f_lo = 2.0 + 1.5 * family, f_hi = f_lo + 1.5;
  std::uniform_real_distribution<double> amp(0.02, 0.08), freq(f_lo, f_hi), angle(0.0, 2.0 * kPi);
  struct Bump {
    double a, kx, kz, phase;
  };
  std::vector<Bump> field;
  for (int i = 0; i < bumps; ++i) {
    const double a = amp(rng), f = freq(rng), th = angle(rng), ph = angle(rng);
    field.push_back({a, f * std::cos(th), f * std::sin(th), ph});
  }

  NormalMap out(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double x = pixel_x(c, size), z = pixel_z(r, size);
      const double r2 = x * x + z * z;
      if (r2 >= 0.995 * radius * radius) continue;
      const double dome = std::sqrt(radius * radius - r2);
      double hx = -x / dome, hz = -z / dome;
      for (const auto& b : field) {
        const double s = -b.a * std::sin(b.kx * x + b.kz * z + b.phase);
        hx += s * b.kx;
        hz += s * b.kz;
      }
      store(out, c, r, Vec3(-hx, -1.0, -hz));
    }
  return out;
}

}  // namespace

NormalMap sphere_normal_map(int size, double radius) {
  if (size < 1) throw InvalidArgument("image size must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("sphere radius must be positive");
  NormalMap out(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double x = pixel_x(c, size), z = pixel_z(r, size);
      const double y2 = radius * radius - x * x - z * z;
      if (y2 <= 0.0) continue;
      store(out, c, r, Vec3(x, -std::sqrt(y2), z) / radius);
    }
  return out;
}

NormalMap gen_normal_map(const ShapeSpec& shape, Rng& rng, int size) {
  if (size < 16) throw InvalidArgument("image size must be at least 16");
  switch (shape.kind) {
    case ShapeKind::Sphere: return sphere_normal_map(size);
    case ShapeKind::Cube: return polytope(cube_planes(), rng, size);
    case ShapeKind::Icosahedron: return polytope(icosahedron_planes(), rng, size);
    case ShapeKind::Cone: return cone(rng, size);
    case ShapeKind::Blob:
      if (shape.family < 0 || shape.family >= kBlobFamilies) throw InvalidArgument("unknown blob family");
      return blob(shape.family, rng, size);
  }
  throw InvalidArgument("unknown shape kind");
}

}  // namespace skyps
