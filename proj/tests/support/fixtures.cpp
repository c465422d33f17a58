#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace texgram::testing {

using engine::LayerKind;
using engine::LayerNode;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          fmt::format("texgram-test-{}-{}", static_cast<long>(::getpid()), counter++);
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path data_dir() { return TEXGRAM_DATA_DIR; }

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t(shape);
  for (float& v : t.data()) v = static_cast<float>(normal(rng));
  return t;
}

LayerNode conv(const std::string& name, const std::string& input, std::size_t in_channels,
               std::size_t out_channels, std::size_t kernel, std::size_t stride, std::size_t padding,
               std::mt19937_64& rng, bool bias) {
  engine::Conv2dParams p;
  p.stride = {stride, stride};
  p.padding = {padding, padding};
  const double fan_in = static_cast<double>(in_channels * kernel * kernel);
  p.weight = random_tensor({out_channels, in_channels, kernel, kernel}, rng, std::sqrt(2.0 / fan_in));
  if (bias) p.bias = random_tensor({out_channels}, rng, 0.1);
  return {name, LayerKind::kConv2d, std::move(p), {input}};
}

LayerNode relu(const std::string& name, const std::string& input) {
  return {name, LayerKind::kRelu, std::monostate{}, {input}};
}

LayerNode max_pool(const std::string& name, const std::string& input, std::size_t kernel,
                   std::size_t stride, std::size_t padding) {
  return {name, LayerKind::kMaxPool,
          engine::PoolParams{{kernel, kernel}, {stride, stride}, {padding, padding}}, {input}};
}

LayerNode avg_pool(const std::string& name, const std::string& input, std::size_t kernel,
                   std::size_t stride, std::size_t padding) {
  return {name, LayerKind::kAvgPool,
          engine::PoolParams{{kernel, kernel}, {stride, stride}, {padding, padding}}, {input}};
}

LayerNode batch_norm(const std::string& name, const std::string& input, std::size_t channels,
                     std::mt19937_64& rng) {
  engine::BatchNormParams p;
  std::uniform_real_distribution<double> positive(0.5, 2.0);
  p.mean = random_tensor({channels}, rng, 0.2);
  p.variance = Tensor({channels});
  for (float& v : p.variance.data()) v = static_cast<float>(positive(rng));
  p.scale = Tensor({channels});
  for (float& v : p.scale.data()) v = static_cast<float>(positive(rng));
  p.shift = random_tensor({channels}, rng, 0.1);
  return {name, LayerKind::kBatchNorm, std::move(p), {input}};
}

LayerNode add(const std::string& name, const std::string& a, const std::string& b) {
  return {name, LayerKind::kAdd, std::monostate{}, {a, b}};
}

LayerNode concat(const std::string& name, std::vector<std::string> inputs) {
  return {name, LayerKind::kConcat, std::monostate{}, std::move(inputs)};
}

engine::InputSpec spec_for(std::size_t height, std::size_t width) {
  engine::InputSpec spec;
  spec.shape = {3, height, width};
  spec.mean = {0.485f, 0.456f, 0.406f};
  spec.std = {0.229f, 0.224f, 0.225f};
  return spec;
}

engine::NetworkGraph random_three_layer_net(std::uint64_t seed, std::size_t size,
                                            std::array<std::size_t, 3> channels) {
  std::mt19937_64 rng(seed);
  std::vector<LayerNode> nodes;
  nodes.push_back(conv("conv1", "input", 3, channels[0], 3, 1, 1, rng));
  nodes.push_back(relu("relu1", "conv1"));
  nodes.push_back(conv("conv2", "relu1", channels[0], channels[1], 3, 1, 1, rng));
  nodes.push_back(relu("relu2", "conv2"));
  nodes.push_back(max_pool("pool", "relu2", 2, 2));
  nodes.push_back(conv("conv3", "pool", channels[1], channels[2], 3, 1, 1, rng));
  nodes.push_back(relu("relu3", "conv3"));
  return engine::NetworkGraph(fmt::format("random3-{}", seed), spec_for(size, size), std::move(nodes),
                              {"relu1", "conv2", "relu2", "pool", "relu3"});
}

engine::NetworkGraph random_two_layer_net(std::uint64_t seed, std::size_t size) {
  std::mt19937_64 rng(seed);
  std::vector<LayerNode> nodes;
  nodes.push_back(conv("conv1", "input", 3, 5, 3, 1, 1, rng));
  nodes.push_back(relu("relu1", "conv1"));
  nodes.push_back(conv("conv2", "relu1", 5, 6, 3, 2, 1, rng));
  nodes.push_back(relu("relu2", "conv2"));
  return engine::NetworkGraph(fmt::format("random2-{}", seed), spec_for(size, size), std::move(nodes),
                              {"conv1", "relu1", "conv2", "relu2"});
}

engine::NetworkGraph mixed_kind_net(std::uint64_t seed, std::size_t size) {
  std::mt19937_64 rng(seed);
  std::vector<LayerNode> nodes;
  nodes.push_back(conv("stem", "input", 3, 6, 3, 1, 1, rng, false));
  nodes.push_back(batch_norm("bn", "stem", 6, rng));
  nodes.push_back(relu("stem_relu", "bn"));
  nodes.push_back(conv("branch_a", "stem_relu", 6, 6, 3, 1, 1, rng));
  nodes.push_back(add("residual", "branch_a", "stem_relu"));
  nodes.push_back(relu("res_relu", "residual"));
  nodes.push_back(max_pool("maxp", "res_relu", 3, 2, 1));
  nodes.push_back(avg_pool("avgp", "res_relu", 3, 2, 1));
  nodes.push_back(concat("cat", {"maxp", "avgp"}));
  nodes.push_back(conv("head", "cat", 12, 7, 1, 1, 0, rng));
  return engine::NetworkGraph(fmt::format("mixed-{}", seed), spec_for(size, size), std::move(nodes),
                              {"bn", "res_relu", "maxp", "cat", "head"});
}

engine::NetworkGraph identity_net(std::size_t channels, std::size_t height, std::size_t width) {
  engine::Conv2dParams p;
  p.weight = Tensor({channels, channels, 1, 1});
  for (std::size_t c = 0; c < channels; ++c) p.weight[c * channels + c] = 1.0f;
  engine::InputSpec spec;
  spec.shape = {channels, height, width};
  std::vector<LayerNode> nodes{{"identity", LayerKind::kConv2d, std::move(p), {"input"}}};
  return engine::NetworkGraph("identity", spec, std::move(nodes), {"identity"});
}

engine::NetworkGraph alexnet_shaped_net(std::uint64_t seed, std::size_t size) {
  std::mt19937_64 rng(seed);
  std::vector<LayerNode> nodes;
  nodes.push_back(conv("features.0", "input", 3, 64, 11, 4, 2, rng));
  nodes.push_back(relu("features.1", "features.0"));
  nodes.push_back(max_pool("features.2", "features.1", 3, 2));
  nodes.push_back(conv("features.3", "features.2", 64, 192, 5, 1, 2, rng));
  nodes.push_back(relu("features.4", "features.3"));
  nodes.push_back(max_pool("features.5", "features.4", 3, 2));
  nodes.push_back(conv("features.6", "features.5", 192, 384, 3, 1, 1, rng));
  nodes.push_back(relu("features.7", "features.6"));
  nodes.push_back(conv("features.8", "features.7", 384, 256, 3, 1, 1, rng));
  nodes.push_back(relu("features.9", "features.8"));
  nodes.push_back(conv("features.10", "features.9", 256, 256, 3, 1, 1, rng));
  nodes.push_back(relu("features.11", "features.10"));
  nodes.push_back(max_pool("features.12", "features.11", 3, 2));
  return engine::NetworkGraph("AlexNet", spec_for(size, size), std::move(nodes),
                              {"features.0", "features.3", "features.6", "features.8", "features.10"});
}

pipeline::RgbImage texture_image(int family, std::uint64_t seed, std::size_t height, std::size_t width) {
  std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(family));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 12.0);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  const double jitter = 0.9 + 0.2 * unit(rng);
  pipeline::RgbImage img{height, width, std::vector<std::uint8_t>(height * width * 3)};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double rgb[3];
      const double fy = static_cast<double>(y), fx = static_cast<double>(x);
      switch (family % 3) {
        case 0: {  // warm horizontal stripes
          const double s = std::sin(2.0 * std::numbers::pi * fy / (8.0 * jitter) + phase);
          rgb[0] = 170 + 70 * s;
          rgb[1] = 60 + 30 * s;
          rgb[2] = 40;
          break;
        }
        case 1: {  // green fine vertical stripes
          const double s = std::sin(2.0 * std::numbers::pi * fx / (3.0 * jitter) + phase);
          rgb[0] = 40;
          rgb[1] = 150 + 90 * s;
          rgb[2] = 70 + 20 * s;
          break;
        }
        default: {  // blue checker speckle
          const bool on = ((x / 2 + y / 2 + static_cast<std::size_t>(phase * 3)) % 2) == 0;
          rgb[0] = 30;
          rgb[1] = on ? 60 : 110;
          rgb[2] = on ? 220 : 120;
          break;
        }
      }
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = rgb[c] + noise(rng);
        img.pixels[(y * width + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return img;
}

void write_texture_dataset(const fs::path& root, int families, int per_class, std::size_t size,
                           std::uint64_t seed) {
  for (int f = 0; f < families; ++f) {
    for (int i = 0; i < per_class; ++i) {
      const auto img = texture_image(f, seed * 1000 + static_cast<std::uint64_t>(f * per_class + i), size, size);
      pipeline::write_png(root / fmt::format("class_{}", f) / fmt::format("img_{:03}.png", i), img);
    }
  }
}

Tensor texture_tensor(int family, std::uint64_t seed, const engine::InputSpec& spec) {
  const std::size_t h = spec.shape[1], w = spec.shape[2];
  return pipeline::normalize_pixels(pipeline::resize_bilinear(texture_image(family, seed, h, w), h, w),
                                    spec);
}

}  // namespace texgram::testing
