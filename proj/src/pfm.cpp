#include "skyps/pfm.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace skyps {

namespace {

float byteswap(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, sizeof u);
  u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
  std::memcpy(&v, &u, sizeof v);
  return v;
}

std::string next_token(std::istream& in) {
  std::string tok;
  in >> tok;
  return tok;
}

}  // namespace

PfmImage read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  PfmImage img;
  const std::string magic = next_token(in);
  if (magic == "PF")
    img.channels = 3;
  else if (magic == "Pf")
    img.channels = 1;
  else
    throw IoError(path.string() + ": not a PFM file");

  double scale = 0.0;
  try {
    img.width = std::stoi(next_token(in));
    img.height = std::stoi(next_token(in));
    scale = std::stod(next_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PFM header");
  }
  if (img.width <= 0 || img.height <= 0 || scale == 0.0)
    throw IoError(path.string() + ": malformed PFM header");
  in.get();  // single whitespace byte ends the header

  const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
  img.data.resize(row * img.height);
  std::vector<float> buf(row);
  const bool file_little = scale < 0.0;
  const bool swap = file_little != (std::endian::native == std::endian::little);
  // File rows run bottom-to-top.
  for (int y = img.height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(row * sizeof(float)));
    if (!in) throw IoError(path.string() + ": truncated PFM data");
    for (std::size_t i = 0; i < row; ++i)
      img.data[static_cast<std::size_t>(y) * row + i] = swap ? byteswap(buf[i]) : buf[i];
  }
  return img;
}

void write_pfm(const std::filesystem::path& path, const PfmImage& image) {
  if (image.channels != 1 && image.channels != 3) throw InvalidArgument("PFM needs 1 or 3 channels");
  const std::size_t row = static_cast<std::size_t>(image.width) * image.channels;
  if (image.data.size() != row * image.height) throw InvalidArgument("PFM data size mismatch");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (image.channels == 3 ? "PF" : "Pf") << '\n'
      << image.width << ' ' << image.height << '\n'
      << "-1.0\n";
  std::vector<float> buf(row);
  const bool swap = std::endian::native != std::endian::little;
  for (int y = image.height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      const float v = image.data[static_cast<std::size_t>(y) * row + i];
      buf[i] = swap ? byteswap(v) : v;
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(row * sizeof(float)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

PfmImage to_pfm(const RgbImage& image) {
  PfmImage p{image.width(), image.height(), 3, {}};
  p.data.reserve(image.size() * 3);
  for (const Rgb& c : image.data())
    for (int k = 0; k < 3; ++k) p.data.push_back(static_cast<float>(c[k]));
  return p;
}

RgbImage rgb_from_pfm(const PfmImage& pfm) {
  RgbImage img(pfm.width, pfm.height, Rgb::Zero());
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (pfm.channels == 3)
      img[i] = Rgb(pfm.data[3 * i], pfm.data[3 * i + 1], pfm.data[3 * i + 2]);
    else
      img[i] = Rgb::Constant(pfm.data[i]);
  }
  return img;
}

PfmImage to_pfm(const NormalMap& normals) {
  PfmImage p{normals.width(), normals.height(), 3, {}};
  p.data.reserve(normals.normals.size() * 3);
  for (std::size_t i = 0; i < normals.normals.size(); ++i) {
    const Vec3 n = normals.mask[i] ? normals.normals[i] : Vec3::Zero();
    for (int k = 0; k < 3; ++k) p.data.push_back(static_cast<float>(n[k]));
  }
  return p;
}

NormalMap normals_from_pfm(const PfmImage& pfm) {
  if (pfm.channels != 3) throw IoError("normal maps must be 3-channel PFM");
  NormalMap nm(pfm.width, pfm.height);
  for (std::size_t i = 0; i < nm.normals.size(); ++i) {
    const Vec3 n(pfm.data[3 * i], pfm.data[3 * i + 1], pfm.data[3 * i + 2]);
    if (n.squaredNorm() > 0.0) {
      nm.normals[i] = n.normalized();
      nm.mask[i] = 1;
    }
  }
  return nm;
}

}  // namespace skyps
