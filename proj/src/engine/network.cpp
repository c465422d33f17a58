#include "texgram/engine/network.hpp"

#include <unordered_map>
#include <utility>

#include "texgram/engine/ops.hpp"
#include "texgram/error.hpp"

namespace texgram::engine {

namespace {

Shape infer_shape(const LayerNode& node, const std::vector<const Shape*>& in) {
  const auto fail = [&node](const std::string& why) -> DataError {
    return DataError("layer '" + node.name + "' (" + std::string(to_string(node.kind)) +
                     "): " + why);
  };
  const auto single = [&]() -> const Shape& {
    if (in.size() != 1) throw fail("expects exactly one input");
    if (in[0]->size() != 3) throw fail("expects a C x H x W input");
    return *in[0];
  };

  switch (node.kind) {
    case LayerKind::kConv2d: {
      const auto* p = std::get_if<Conv2dParams>(&node.params);
      if (!p || p->weight.rank() != 4) throw fail("missing or malformed weight");
      const Shape& s = single();
      const Shape& w = p->weight.shape();
      if (w[1] != s[0]) {
        throw fail("kernel channel count " + std::to_string(w[1]) +
                   " does not match upstream channel count " + std::to_string(s[0]));
      }
      if (!p->bias.empty() && p->bias.size() != w[0]) throw fail("bias length mismatch");
      return {w[0], output_extent(s[1], w[2], p->stride.h, p->padding.h),
              output_extent(s[2], w[3], p->stride.w, p->padding.w)};
    }
    case LayerKind::kRelu:
      return single();
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      const auto* p = std::get_if<PoolParams>(&node.params);
      if (!p) throw fail("missing pool parameters");
      if (2 * p->padding.h > p->kernel.h || 2 * p->padding.w > p->kernel.w) {
        throw fail("padding must not exceed half the kernel");
      }
      const Shape& s = single();
      return {s[0], output_extent(s[1], p->kernel.h, p->stride.h, p->padding.h),
              output_extent(s[2], p->kernel.w, p->stride.w, p->padding.w)};
    }
    case LayerKind::kBatchNorm: {
      const auto* p = std::get_if<BatchNormParams>(&node.params);
      if (!p) throw fail("missing batch norm statistics");
      const Shape& s = single();
      for (const Tensor* t : {&p->mean, &p->variance, &p->scale, &p->shift}) {
        if (t->size() != s[0]) throw fail("statistics length does not match channel count");
      }
      return s;
    }
    case LayerKind::kAdd: {
      if (in.size() < 2) throw fail("expects at least two inputs");
      for (const Shape* s : in) {
        if (*s != *in[0]) throw fail("input shapes differ");
      }
      return *in[0];
    }
    case LayerKind::kConcat: {
      if (in.empty()) throw fail("expects at least one input");
      Shape out = *in[0];
      out[0] = 0;
      for (const Shape* s : in) {
        if (s->size() != 3 || (*s)[1] != out[1] || (*s)[2] != out[2]) {
          throw fail("inputs must share spatial extents");
        }
        out[0] += (*s)[0];
      }
      return out;
    }
  }
  throw fail("unhandled kind");
}

}  // namespace

NetworkGraph::NetworkGraph(std::string model_name, InputSpec input_spec,
                           std::vector<LayerNode> nodes, std::vector<std::string> taps)
    : model_name_(std::move(model_name)),
      input_spec_(std::move(input_spec)),
      nodes_(std::move(nodes)),
      taps_(std::move(taps)) {
  if (input_spec_.shape.size() != 3 || input_spec_.shape[0] != 3) {
    throw DataError("input spec must describe a 3 x H x W image, got " +
                    shape_to_string(input_spec_.shape));
  }
  for (float s : input_spec_.std) {
    if (!(s > 0.f)) throw DataError("input spec std must be positive");
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const LayerNode& node = nodes_[i];
    if (node.name.empty() || node.name == kInputName) {
      throw DataError("invalid layer name '" + node.name + "'");
    }
    std::vector<std::size_t> inputs;
    std::vector<const Shape*> in_shapes;
    for (const auto& ref : node.inputs) {
      if (ref == kInputName) {
        inputs.push_back(kInput);
        in_shapes.push_back(&input_spec_.shape);
        continue;
      }
      // Only earlier nodes resolve, which enforces topological order and
      // rules out cycles.
      const auto it = index.find(ref);
      if (it == index.end()) {
        throw DataError("dangling input reference '" + ref + "' in layer '" + node.name + "'");
      }
      inputs.push_back(it->second);
      in_shapes.push_back(&shapes_[it->second]);
    }
    shapes_.push_back(infer_shape(node, in_shapes));
    input_indices_.push_back(std::move(inputs));
    if (!index.emplace(node.name, i).second) {
      throw DataError("duplicate layer name '" + node.name + "'");
    }
  }

  if (taps_.empty()) throw DataError("network '" + model_name_ + "' declares no taps");
  for (const auto& tap : taps_) {
    const auto it = index.find(tap);
    if (it == index.end()) throw DataError("tap '" + tap + "' is not a layer of the network");
    tap_indices_.push_back(it->second);
  }

  required_.assign(nodes_.size(), false);
  for (std::size_t t : tap_indices_) required_[t] = true;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (!required_[i]) continue;
    for (std::size_t j : input_indices_[i]) {
      if (j != kInput) required_[j] = true;
    }
  }
}

std::optional<std::size_t> NetworkGraph::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t NetworkGraph::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DataError("no layer named '" + std::string(name) + "'");
}

NetworkGraph NetworkGraph::with_taps(std::vector<std::string> taps) const {
  return NetworkGraph(model_name_, input_spec_, nodes_, std::move(taps));
}

}  // namespace texgram::engine
