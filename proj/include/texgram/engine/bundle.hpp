#pragma once

#include <filesystem>

#include "texgram/engine/network.hpp"

namespace texgram::engine {

inline constexpr int kBundleFormatVersion = 1;

// Reads a weight bundle directory: `manifest.json` plus one raw blob per
// tensor (little-endian float32, row-major, no header, 4 * prod(shape)
// bytes). Blob checksums are verified when the manifest carries them.
NetworkGraph load_model_bundle(const std::filesystem::path& dir);

// Writes `net` as a bundle with SHA-256 checksums for every blob.
void save_model_bundle(const NetworkGraph& net, const std::filesystem::path& dir);

}  // namespace texgram::engine
