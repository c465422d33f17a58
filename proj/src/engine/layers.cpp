#include "texgram/engine/layers.hpp"

#include "texgram/error.hpp"

namespace texgram::engine {

namespace {
constexpr std::array<std::pair<LayerKind, std::string_view>, 7> kKindNames{{
    {LayerKind::kConv2d, "conv2d"},
    {LayerKind::kRelu, "relu"},
    {LayerKind::kMaxPool, "maxpool"},
    {LayerKind::kAvgPool, "avgpool"},
    {LayerKind::kBatchNorm, "batchnorm-inference"},
    {LayerKind::kAdd, "add"},
    {LayerKind::kConcat, "concat"},
}};
}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw DataError("unknown layer kind '" + std::string(name) + "'");
}

}  // namespace texgram::engine
