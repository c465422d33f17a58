#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "texgram/engine/network.hpp"
#include "texgram/tensor.hpp"

namespace texgram::pipeline {

inline constexpr std::size_t kMaxImageSide = 16384;

// 8-bit RGB, height x width x 3, row-major.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }
};

// Grayscale is replicated to three channels and alpha is dropped. Throws
// DataError when the file cannot be decoded or its size is out of range.
RgbImage decode_image(const std::filesystem::path& path);

// Bilinear resampling with half-pixel centres and edge clamping, no
// antialiasing. Returns 3 x height x width in the 0..255 pixel scale.
Tensor resize_bilinear(const RgbImage& image, std::size_t height, std::size_t width);

// Pixel scale -> [0, 1] -> (v - mean_c) / std_c.
Tensor normalize_pixels(Tensor pixels, const engine::InputSpec& spec);

// Decode, resize to the spec's spatial size, normalize.
Tensor preprocess_image(const std::filesystem::path& path, const engine::InputSpec& spec);

// Inverse of normalize_pixels, clamped and rounded to 8 bits.
RgbImage to_rgb_image(const Tensor& normalized, const engine::InputSpec& spec);

void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace texgram::pipeline
