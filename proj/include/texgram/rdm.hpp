#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "texgram/gram.hpp"

namespace texgram {

enum class DistanceVariant {
  kUpperTriangle,  // Euclidean distance between Gram vectors
  kFullFrobenius,  // off-diagonal terms counted twice (= full-matrix Frobenius)
};

std::string to_string(DistanceVariant variant);  // "upper-tri" / "full-frobenius"
DistanceVariant parse_distance_variant(const std::string& name);

struct RdmOptions {
  DistanceVariant variant = DistanceVariant::kUpperTriangle;
  // Z-score each vector over its coordinates before measuring distances.
  bool standardize = false;
  std::size_t workers = 0;
};

// Representational dissimilarity matrix: symmetric, zero diagonal,
// float32 storage.
struct Rdm {
  std::size_t size = 0;
  std::vector<float> values;  // size x size, row-major
  std::vector<std::string> item_ids;

  float at(std::size_t a, std::size_t b) const { return values[a * size + b]; }
};

// Distances computed for a < b (double accumulation in coordinate order)
// and mirrored. Needs at least two vectors of equal length.
Rdm compute_rdm(std::span<const GramVector> vectors, std::vector<std::string> item_ids,
                const RdmOptions& options = {});

// Stable sort of rows/columns by (label, original index). `permutation`
// receives the original index of each new position.
Rdm sort_by_class(const Rdm& rdm, std::span<const int> labels,
                  std::vector<std::size_t>* permutation = nullptr);

struct RdmSidecar {
  std::string layer;
  std::string model;
  DistanceVariant variant = DistanceVariant::kUpperTriangle;
};

// `<stem>.bin` (float32 row-major) + `<stem>.json`
// {size, layer, model, item_ids, distance_variant}.
void save_rdm(const std::filesystem::path& bin_path, const Rdm& rdm, const RdmSidecar& sidecar);
Rdm load_rdm(const std::filesystem::path& bin_path, RdmSidecar* sidecar = nullptr);

}  // namespace texgram
