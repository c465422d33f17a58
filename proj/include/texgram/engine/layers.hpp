#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "texgram/tensor.hpp"

namespace texgram::engine {

enum class LayerKind { kConv2d, kRelu, kMaxPool, kAvgPool, kBatchNorm, kAdd, kConcat };

// Bundle spelling: conv2d, relu, maxpool, avgpool, batchnorm-inference, add, concat.
std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct Pair {
  std::size_t h = 0;
  std::size_t w = 0;
  friend bool operator==(const Pair&, const Pair&) = default;
};

// Kernel shape comes from `weight` (K x C x kh x kw); `bias` is empty or length K.
struct Conv2dParams {
  Pair stride{1, 1};
  Pair padding{0, 0};
  Tensor weight;
  Tensor bias;
};

// Padded positions never win a max and count towards the divisor of an average.
struct PoolParams {
  Pair kernel{2, 2};
  Pair stride{2, 2};
  Pair padding{0, 0};
};

struct BatchNormParams {
  Tensor mean;
  Tensor variance;
  Tensor scale;
  Tensor shift;
  double epsilon = 1e-5;
};

using LayerParams = std::variant<std::monostate, Conv2dParams, PoolParams, BatchNormParams>;

struct LayerNode {
  std::string name;
  LayerKind kind = LayerKind::kRelu;
  LayerParams params;
  std::vector<std::string> inputs;
};

}  // namespace texgram::engine
