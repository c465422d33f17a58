#pragma once

#include <cstdint>

#include "texgram/tensor.hpp"

namespace texgram::synthesis {

// SplitMix64 finalizer applied to (seed, counter): a stateless,
// counter-based generator whose streams are identical on every platform.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter);

// Uniform on (0, 1], 53-bit resolution.
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

// Standard normal value for element `index` (Box-Muller on counters
// 2*index and 2*index + 1).
double counter_gaussian(std::uint64_t seed, std::uint64_t index);

Tensor gaussian_noise(const Shape& shape, std::uint64_t seed);

}  // namespace texgram::synthesis
