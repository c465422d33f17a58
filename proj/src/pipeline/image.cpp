#include "texgram/pipeline/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"

namespace fs = std::filesystem;

namespace texgram::pipeline {

RgbImage decode_image(const fs::path& path) {
  cv::Mat raw;
  try {
    raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw DataError("cannot decode image " + path.string() + ": " + e.what());
  }
  if (raw.empty()) throw DataError("cannot decode image " + path.string());
  if (raw.rows < 1 || raw.cols < 1 || static_cast<std::size_t>(raw.rows) > kMaxImageSide ||
      static_cast<std::size_t>(raw.cols) > kMaxImageSide) {
    throw DataError("image size out of range: " + path.string());
  }

  cv::Mat eight_bit = raw;
  if (raw.depth() == CV_16U) {
    raw.convertTo(eight_bit, CV_8U, 1.0 / 257.0);
  } else if (raw.depth() != CV_8U) {
    throw DataError("unsupported pixel depth in " + path.string());
  }
  cv::Mat rgb;
  switch (eight_bit.channels()) {
    case 1: cv::cvtColor(eight_bit, rgb, cv::COLOR_GRAY2RGB); break;
    case 3: cv::cvtColor(eight_bit, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(eight_bit, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw DataError("unsupported channel count in " + path.string());
  }

  RgbImage out;
  out.height = static_cast<std::size_t>(rgb.rows);
  out.width = static_cast<std::size_t>(rgb.cols);
  out.pixels.resize(out.height * out.width * 3);
  for (int y = 0; y < rgb.rows; ++y) {
    const std::uint8_t* row = rgb.ptr<std::uint8_t>(y);
    std::copy(row, row + rgb.cols * 3, out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * rgb.cols * 3);
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> resample_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    taps[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor resize_bilinear(const RgbImage& image, std::size_t height, std::size_t width) {
  if (image.height == 0 || image.width == 0 || height == 0 || width == 0) {
    throw DataError("resize of an empty image");
  }
  const auto ys = resample_taps(image.height, height);
  const auto xs = resample_taps(image.width, width);
  Tensor out(Shape{3, height, width});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const Tap& ty = ys[y];
      for (std::size_t x = 0; x < width; ++x) {
        const Tap& tx = xs[x];
        const double top = (1.0 - tx.frac) * image.at(ty.lo, tx.lo, c) + tx.frac * image.at(ty.lo, tx.hi, c);
        const double bottom = (1.0 - tx.frac) * image.at(ty.hi, tx.lo, c) + tx.frac * image.at(ty.hi, tx.hi, c);
        out.at(c, y, x) = static_cast<float>((1.0 - ty.frac) * top + ty.frac * bottom);
      }
    }
  }
  return out;
}

Tensor normalize_pixels(Tensor pixels, const engine::InputSpec& spec) {
  if (pixels.rank() != 3 || pixels.extent(0) != 3) throw DataError("expected a 3 x H x W image");
  const std::size_t plane = pixels.extent(1) * pixels.extent(2);
  auto data = pixels.data();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      float& v = data[c * plane + i];
      v = (v / 255.0f - spec.mean[c]) / spec.std[c];
    }
  }
  return pixels;
}

Tensor preprocess_image(const fs::path& path, const engine::InputSpec& spec) {
  if (spec.shape.size() != 3 || spec.shape[0] != 3) {
    throw DataError("input spec must describe a 3 x H x W image");
  }
  return normalize_pixels(resize_bilinear(decode_image(path), spec.shape[1], spec.shape[2]), spec);
}

RgbImage to_rgb_image(const Tensor& normalized, const engine::InputSpec& spec) {
  if (normalized.rank() != 3 || normalized.extent(0) != 3) {
    throw DataError("expected a 3 x H x W image");
  }
  RgbImage out;
  out.height = normalized.extent(1);
  out.width = normalized.extent(2);
  out.pixels.resize(out.height * out.width * 3);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = (normalized.at(c, y, x) * spec.std[c] + spec.mean[c]) * 255.0;
        out.pixels[(y * out.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

void write_png(const fs::path& path, const RgbImage& image) {
  if (image.pixels.size() != image.height * image.width * 3 || image.pixels.empty()) {
    throw DataError("invalid image buffer for " + path.string());
  }
  cv::Mat rgb(static_cast<int>(image.height), static_cast<int>(image.width), CV_8UC3,
              const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  std::vector<std::uint8_t> encoded;
  if (!cv::imencode(".png", bgr, encoded)) throw DataError("PNG encoding failed for " + path.string());
  io::write_file(path, std::span<const char>(reinterpret_cast<const char*>(encoded.data()),
                                            encoded.size()));
}

}  // namespace texgram::pipeline
