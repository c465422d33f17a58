#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "texgram/engine/network.hpp"
#include "texgram/tensor.hpp"

namespace texgram::engine {

// Activations of one tapped layer: `channels` rows of `samples` (= H x W)
// values each, row-major.
template <typename T>
struct BasicFeatureMap {
  std::string layer_name;
  std::size_t channels = 0;
  std::size_t samples = 0;
  std::vector<T> data;

  std::span<const T> row(std::size_t channel) const {
    return std::span<const T>(data).subspan(channel * samples, samples);
  }
  void validate() const;
};

using FeatureMap = BasicFeatureMap<float>;

enum class Retention {
  kInferenceOnly,  // free every activation as soon as its consumers ran
  kForBackward,    // keep what backward() and tangent() need
};

// Per-call forward/backward state over a shared, immutable NetworkGraph.
// Not thread-safe; use one session per thread.
template <typename T>
class BasicSession {
 public:
  explicit BasicSession(const NetworkGraph& net, Retention retention = Retention::kForBackward);

  const NetworkGraph& network() const noexcept { return *net_; }

  // One FeatureMap per tap, in tap order. Only nodes on tap-to-input paths
  // are evaluated. Throws NumericalError on non-finite activations.
  std::vector<BasicFeatureMap<T>> forward(const BasicTensor<T>& image);

  // d/d(image) of sum_t <tap_grads[t], tap_t(image)>. Requires a preceding
  // forward() on the same image in kForBackward mode.
  BasicTensor<T> backward(const BasicTensor<T>& image,
                          std::span<const BasicFeatureMap<T>> tap_grads) const;

  // Directional derivative of every tap at the last forward point.
  std::vector<BasicFeatureMap<T>> tangent(const BasicTensor<T>& direction) const;

  // Hash of every ReLU on/off pattern and max-pool argmax of the last
  // forward. Equal hashes mean the network is locally linear between points.
  std::uint64_t activation_pattern() const;

 private:
  void require_forward(const BasicTensor<T>& image) const;

  const NetworkGraph* net_;
  Retention retention_;
  bool has_forward_ = false;
  BasicTensor<T> image_;
  std::vector<BasicTensor<T>> retained_;           // ReLU outputs
  std::vector<std::vector<std::uint32_t>> argmax_;  // max-pool routes
};

using Session = BasicSession<float>;

extern template class BasicSession<float>;
extern template class BasicSession<double>;

// Single forward pass without keeping state.
template <typename T>
std::vector<BasicFeatureMap<T>> forward_with_taps(const NetworkGraph& net,
                                                  const BasicTensor<T>& image) {
  return BasicSession<T>(net, Retention::kInferenceOnly).forward(image);
}

}  // namespace texgram::engine
