#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "texgram/engine/network.hpp"
#include "texgram/pipeline/image.hpp"
#include "texgram/tensor.hpp"

namespace texgram::testing {

// Removed with its contents on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path data_dir();

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0);

engine::LayerNode conv(const std::string& name, const std::string& input, std::size_t in_channels,
                       std::size_t out_channels, std::size_t kernel, std::size_t stride,
                       std::size_t padding, std::mt19937_64& rng, bool bias = true);
engine::LayerNode relu(const std::string& name, const std::string& input);
engine::LayerNode max_pool(const std::string& name, const std::string& input, std::size_t kernel,
                           std::size_t stride, std::size_t padding = 0);
engine::LayerNode avg_pool(const std::string& name, const std::string& input, std::size_t kernel,
                           std::size_t stride, std::size_t padding = 0);
engine::LayerNode batch_norm(const std::string& name, const std::string& input,
                             std::size_t channels, std::mt19937_64& rng);
engine::LayerNode add(const std::string& name, const std::string& a, const std::string& b);
engine::LayerNode concat(const std::string& name, std::vector<std::string> inputs);

engine::InputSpec spec_for(std::size_t height, std::size_t width);

// conv(3->c0) relu conv(c0->c1) relu maxpool conv(c1->c2) relu; taps on
// relu1, conv2, relu2, pool, relu3.
engine::NetworkGraph random_three_layer_net(std::uint64_t seed, std::size_t size = 16,
                                            std::array<std::size_t, 3> channels = {6, 8, 8});

// conv relu conv relu with taps conv1, relu1, conv2, relu2.
engine::NetworkGraph random_two_layer_net(std::uint64_t seed, std::size_t size = 12);

// Every layer kind: conv, batchnorm, relu, maxpool (padded), avgpool
// (padded), add (residual) and concat.
engine::NetworkGraph mixed_kind_net(std::uint64_t seed, std::size_t size = 12);

// Single 1x1 conv with identity weights over `channels` channels.
engine::NetworkGraph identity_net(std::size_t channels, std::size_t height, std::size_t width);

// AlexNet feature extractor geometry (random weights), taps on the conv
// layers features.0/3/6/8/10.
engine::NetworkGraph alexnet_shaped_net(std::uint64_t seed, std::size_t size = 224);

// Synthetic texture families that differ in colour and orientation;
// `seed` varies phase, frequency jitter and noise within a family.
pipeline::RgbImage texture_image(int family, std::uint64_t seed, std::size_t height,
                                 std::size_t width);

// texture_image at the spec's size, normalized as the pipeline would.
Tensor texture_tensor(int family, std::uint64_t seed, const engine::InputSpec& spec);

// root/<class_i>/img_<j>.png for `families` classes.
void write_texture_dataset(const std::filesystem::path& root, int families, int per_class,
                           std::size_t size, std::uint64_t seed);

}  // namespace texgram::testing
