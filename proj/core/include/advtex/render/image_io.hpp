#pragma once

#include <filesystem>

#include "advtex/diff/tensor.hpp"
#include "advtex/scene/texture.hpp"

namespace advtex::render {

/// Binary PPM (P6, maxval 255) of an [H,W,3] image in [0,1].
void write_ppm(const diff::Tensor& image, const std::filesystem::path& path);
diff::Tensor read_ppm(const std::filesystem::path& path);

/// Texture as PPM plus a lossless sidecar: "ADVTEXT1", uint32 width, uint32
/// height, then width*height*3 little-endian float64 values.
void write_texture(const scene::TextureMap& tex, const std::filesystem::path& ppm_path,
                   const std::filesystem::path& raw_path);
void write_texture_raw(const scene::TextureMap& tex, const std::filesystem::path& raw_path);
scene::TextureMap read_texture_raw(const std::filesystem::path& raw_path);

}  // namespace advtex::render
