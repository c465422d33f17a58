#include "texgram/synthesis/random.hpp"

#include <cmath>
#include <numbers>

namespace texgram::synthesis {

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>((counter_hash(seed, counter) >> 11) + 1) * 0x1.0p-53;
}

double counter_gaussian(std::uint64_t seed, std::uint64_t index) {
  const double u1 = counter_uniform(seed, 2 * index);
  const double u2 = counter_uniform(seed, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor gaussian_noise(const Shape& shape, std::uint64_t seed) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(counter_gaussian(seed, i));
  return t;
}

}  // namespace texgram::synthesis
