#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "texgram/engine/network.hpp"
#include "texgram/engine/session.hpp"

// Binary records exchanged with the model exporter:
//   feature map: 16-byte header {"FMAP", u32 version=1, u32 channels,
//                u32 samples} + channels*samples little-endian float32
//   tensor:      16-byte header {"TNSR", u32 version=1, u32 rank, u32 0}
//                + rank u32 extents + prod(extents) float32
// A golden directory holds `golden.json`
//   {"model_name", "input": <tensor file>, "taps": [{"name", "file"}...]}
// plus the referenced records.
namespace texgram::engine {

void write_feature_map(const std::filesystem::path& path, const FeatureMap& map);
FeatureMap read_feature_map(const std::filesystem::path& path, std::string layer_name = {});

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

struct GoldenTapResult {
  std::string layer_name;
  std::size_t channels = 0;
  double max_abs_error = 0.0;
  // max |engine - golden| / max |golden|
  double relative_error = 0.0;
};

// Writes the golden layout for `image` using this engine's own activations.
void write_golden(const NetworkGraph& net, const Tensor& image,
                  const std::filesystem::path& dir);

// Runs the engine on the golden input and compares every tap.
std::vector<GoldenTapResult> compare_golden(const NetworkGraph& net,
                                            const std::filesystem::path& dir);

}  // namespace texgram::engine
