#pragma once

#include <random>
#include <string>
#include <string_view>

#include "skyps/types.hpp"

namespace skyps {

enum class ShapeKind { Sphere, Cube, Icosahedron, Cone, Blob };

ShapeKind parse_shape_kind(std::string_view name);
std::string_view to_string(ShapeKind kind);

/// Number of distinct blob families (frequency bands of the bump field).
constexpr int kBlobFamilies = 3;

/// A shape kind plus, for blobs, its family. Label is e.g. "cube" or "blob2".
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Sphere;
  int family = 0;

  std::string label() const;
  static ShapeSpec parse(std::string_view label);
  bool operator==(const ShapeSpec&) const = default;
};

using Rng = std::mt19937_64;

/// Uniformly distributed rotation (normalised Gaussian quaternion).
Mat3 random_rotation(Rng& rng);

/// Orthographic view along +y of a shape in [-1,1]^2. Pixel (c,r) sits at
/// x = 2(c+0.5)/size - 1, z = 1 - 2(r+0.5)/size. Valid pixels have unit,
/// camera-facing normals (n_y < 0).
NormalMap gen_normal_map(const ShapeSpec& shape, Rng& rng, int size);
inline NormalMap gen_normal_map(ShapeKind kind, Rng& rng, int size) { return gen_normal_map({kind, 0}, rng, size); }

/// Analytic sphere of the given radius centred in the frame.
NormalMap sphere_normal_map(int size, double radius = 0.9);

}  // namespace skyps
