#include "advtex/render/image_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace advtex::render {

namespace {

constexpr char kTexMagic[8] = {'A', 'D', 'V', 'T', 'E', 'X', 'T', '1'};

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts need byte swapping");
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("unexpected end of file");
  return v;
}

}  // namespace

void write_ppm(const diff::Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 3 || image.dim(2) != 3) throw diff::ShapeError("write_ppm: image must be [H,W,3]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P6\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  for (double v : image.values()) {
    const auto b = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    out.put(static_cast<char>(b));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

diff::Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || w == 0 || h == 0) throw std::runtime_error("unsupported PPM " + path.string());
  in.get();
  diff::Tensor img({h, w, 3});
  for (double& v : img.values()) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("truncated PPM " + path.string());
    v = static_cast<unsigned char>(c) / 255.0;
  }
  return img;
}

void write_texture_raw(const scene::TextureMap& tex, const std::filesystem::path& raw_path) {
  std::ofstream out(raw_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + raw_path.string() + " for writing");
  out.write(kTexMagic, sizeof(kTexMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tex.width()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tex.height()));
  for (double v : tex.values()) put_le<double>(out, v);
  if (!out) throw std::runtime_error("failed writing " + raw_path.string());
}

void write_texture(const scene::TextureMap& tex, const std::filesystem::path& ppm_path,
                   const std::filesystem::path& raw_path) {
  write_ppm(tex.to_tensor(), ppm_path);
  write_texture_raw(tex, raw_path);
}

scene::TextureMap read_texture_raw(const std::filesystem::path& raw_path) {
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + raw_path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kTexMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(raw_path.string() + " is not a texture sidecar");
  }
  const auto w = get_le<std::uint32_t>(in);
  const auto h = get_le<std::uint32_t>(in);
  if (w == 0 || h == 0 || w > 1u << 14 || h > 1u << 14) throw std::runtime_error("bad texture size in " + raw_path.string());
  std::vector<double> values(static_cast<std::size_t>(w) * h * 3);
  for (double& v : values) v = get_le<double>(in);
  return scene::TextureMap(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

}  // namespace advtex::render
