#include "advtex/scene/texture.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace advtex::scene {

TextureMap::TextureMap(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("texture dimensions must be positive");
  values_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] = fill[i % 3];
}

TextureMap::TextureMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("texture dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw std::invalid_argument("texture value count " + std::to_string(values_.size()) + " does not match " +
                                std::to_string(width) + "x" + std::to_string(height) + "x3");
  }
}

diff::Tensor TextureMap::to_tensor() const {
  return diff::Tensor({static_cast<std::size_t>(height_), static_cast<std::size_t>(width_), 3}, values_);
}

TextureMap TextureMap::from_tensor(const diff::Tensor& t) {
  if (t.rank() != 3 || t.dim(2) != 3) throw diff::ShapeError("texture tensor must be [H,W,3]");
  return TextureMap(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)), t.storage());
}

void TextureMap::clip() {
  for (double& v : values_) v = std::clamp(v, 0.0, 1.0);
}

bool TextureMap::in_unit_range() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

std::uint64_t TextureMap::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  mix(&width_, sizeof(width_));
  mix(&height_, sizeof(height_));
  mix(values_.data(), values_.size() * sizeof(double));
  return h;
}

}  // namespace advtex::scene
