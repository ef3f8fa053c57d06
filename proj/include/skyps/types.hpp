#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace skyps {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rgb = Eigen::Array3d;

// Rec.709 luminance weights.
inline double luminance(const Rgb& c) { return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]; }

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// LᵀL is (numerically) singular; carries the numerical rank of L.
class IllPosedError : public std::runtime_error {
 public:
  IllPosedError(const std::string& what, int rank) : std::runtime_error(what), rank_(rank) {}
  int rank() const { return rank_; }

 private:
  int rank_;
};

class NightSkyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UndefinedNormalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major 2-D grid. Row 0 is the top of the image.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw InvalidArgument("Grid: negative size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return other.width() == width_ && other.height() == height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Grid<Rgb>;
using Mask = Grid<unsigned char>;

/// Per-pixel world-frame unit normals. Pixels outside the mask hold (0,0,0).
struct NormalMap {
  Grid<Vec3> normals;
  Mask mask;

  NormalMap() = default;
  NormalMap(int width, int height)
      : normals(width, height, Vec3::Zero()), mask(width, height, 0) {}

  int width() const { return normals.width(); }
  int height() const { return normals.height(); }
  bool valid(int x, int y) const { return mask(x, y) != 0; }
  void set(int x, int y, const Vec3& n) {
    normals(x, y) = n;
    mask(x, y) = 1;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto m : mask.data()) c += m != 0;
    return c;
  }
};

}  // namespace skyps
