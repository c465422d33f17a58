#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "texgram/engine/session.hpp"

namespace texgram {

// Channel-by-channel inner products of a feature map, raw sums (no division
// by the number of spatial samples).
struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // n x n, row-major, exactly symmetric

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// Upper triangle of a GramMatrix including the diagonal, row-major.
struct GramVector {
  std::size_t n = 0;
  std::vector<double> values;  // n (n + 1) / 2 entries
};

constexpr std::size_t gram_vector_length(std::size_t n) { return n * (n + 1) / 2; }

// G_ij = sum_m F_im F_jm, accumulated in double; each unordered pair is
// computed once and mirrored. Throws NumericalError on non-finite input.
template <typename T>
GramMatrix gram_matrix(const engine::BasicFeatureMap<T>& features);

GramVector gram_vectorize(const GramMatrix& gram);
GramMatrix gram_devectorize(const GramVector& vec);

// Cache record: 16-byte header {"GRAM", u32 version=1, u32 n, u32 0}
// followed by the vector as little-endian float32.
inline constexpr std::uint32_t kGramRecordVersion = 1;
void write_gram_record(const std::filesystem::path& path, const GramVector& vec);
GramVector read_gram_record(const std::filesystem::path& path);

}  // namespace texgram
