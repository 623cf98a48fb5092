#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "advtex/diff/tensor.hpp"

namespace advtex::scene {

using Rgb = std::array<double, 3>;

/// Height x width x 3 colour grid, row-major with channels innermost. Values
/// live in [0,1]; update loops restore that range with clip().
class TextureMap {
 public:
  TextureMap() = default;
  TextureMap(int width, int height, Rgb fill = {0.5, 0.5, 0.5});
  TextureMap(int width, int height, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(int x, int y, int c) { return values_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return values_[index(x, y, c)]; }
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// [H,W,3] tensor copy, for use as a differentiable leaf.
  diff::Tensor to_tensor() const;
  static TextureMap from_tensor(const diff::Tensor& t);

  void clip();
  bool in_unit_range() const;
  /// FNV-1a over the raw IEEE-754 bytes.
  std::uint64_t hash() const;

  friend bool operator==(const TextureMap&, const TextureMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

}  // namespace advtex::scene
