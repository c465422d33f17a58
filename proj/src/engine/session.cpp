#include "texgram/engine/session.hpp"

#include <string>

#include "texgram/engine/ops.hpp"
#include "texgram/error.hpp"

namespace texgram::engine {

template <typename T>
void BasicFeatureMap<T>::validate() const {
  if (channels == 0 || samples == 0) {
    throw DataError("feature map '" + layer_name + "' has an empty extent");
  }
  if (data.size() != channels * samples) {
    throw DataError("feature map '" + layer_name + "' data length does not match " +
                    std::to_string(channels) + " x " + std::to_string(samples));
  }
}

template struct BasicFeatureMap<float>;
template struct BasicFeatureMap<double>;

namespace {

template <typename T>
void accumulate(BasicTensor<T>& into, BasicTensor<T>&& value) {
  if (into.empty()) {
    into = std::move(value);
    return;
  }
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += value[i];
}

template <typename T>
BasicFeatureMap<T> to_feature_map(const std::string& name, const BasicTensor<T>& t) {
  return {name, t.extent(0), t.extent(1) * t.extent(2), t.storage()};
}

}  // namespace

template <typename T>
BasicSession<T>::BasicSession(const NetworkGraph& net, Retention retention)
    : net_(&net), retention_(retention) {}

template <typename T>
std::vector<BasicFeatureMap<T>> BasicSession<T>::forward(const BasicTensor<T>& image) {
  const NetworkGraph& net = *net_;
  if (image.shape() != net.input_spec().shape) {
    throw DataError("input shape " + shape_to_string(image.shape()) +
                    " does not match the network input spec " +
                    shape_to_string(net.input_spec().shape));
  }
  const auto& nodes = net.nodes();
  const std::size_t n = nodes.size();

  std::vector<std::size_t> pending(n, 0);
  std::vector<bool> is_tap(n, false);
  for (std::size_t t : net.tap_indices()) is_tap[t] = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!net.is_required(i)) continue;
    for (std::size_t j : net.input_indices(i)) {
      if (j != NetworkGraph::kInput) ++pending[j];
    }
  }

  has_forward_ = false;
  retained_.assign(n, {});
  argmax_.assign(n, {});
  std::vector<BasicTensor<T>> live(n);
  std::vector<BasicFeatureMap<T>> tap_values(n);

  for (std::size_t i = 0; i < n; ++i) {
    if (!net.is_required(i)) continue;
    const LayerNode& node = nodes[i];
    std::vector<const BasicTensor<T>*> in;
    for (std::size_t j : net.input_indices(i)) {
      in.push_back(j == NetworkGraph::kInput ? &image : &live[j]);
    }

    BasicTensor<T> out;
    switch (node.kind) {
      case LayerKind::kConv2d: {
        const auto& p = std::get<Conv2dParams>(node.params);
        out = conv2d(*in[0], p.weight, p.stride, p.padding, &p.bias);
        break;
      }
      case LayerKind::kRelu:
        out = relu(*in[0]);
        break;
      case LayerKind::kMaxPool:
        out = max_pool2d(*in[0], std::get<PoolParams>(node.params),
                         retention_ == Retention::kForBackward ? &argmax_[i] : nullptr);
        break;
      case LayerKind::kAvgPool:
        out = avg_pool2d(*in[0], std::get<PoolParams>(node.params));
        break;
      case LayerKind::kBatchNorm:
        out = batch_norm(*in[0], std::get<BatchNormParams>(node.params));
        break;
      case LayerKind::kAdd:
        out = add<T>(in);
        break;
      case LayerKind::kConcat:
        out = concat<T>(in);
        break;
    }
    if (!out.all_finite()) {
      throw NumericalError("non-finite activation in layer '" + node.name +
                           "' (corrupt weights or input?)");
    }

    for (std::size_t j : net.input_indices(i)) {
      if (j != NetworkGraph::kInput && --pending[j] == 0) live[j] = {};
    }
    if (is_tap[i]) tap_values[i] = to_feature_map(node.name, out);
    if (retention_ == Retention::kForBackward && node.kind == LayerKind::kRelu) {
      retained_[i] = out;
    }
    if (pending[i] > 0) live[i] = std::move(out);
  }

  std::vector<BasicFeatureMap<T>> taps;
  taps.reserve(net.tap_indices().size());
  for (std::size_t t : net.tap_indices()) taps.push_back(tap_values[t]);
  if (retention_ == Retention::kForBackward) {
    image_ = image;
    has_forward_ = true;
  }
  return taps;
}

template <typename T>
void BasicSession<T>::require_forward(const BasicTensor<T>& image) const {
  if (!has_forward_) {
    throw DataError("backward called without a preceding forward pass retained for backward");
  }
  if (!(image == image_)) throw DataError("backward called on a different image than forward");
}

template <typename T>
BasicTensor<T> BasicSession<T>::backward(const BasicTensor<T>& image,
                                         std::span<const BasicFeatureMap<T>> tap_grads) const {
  require_forward(image);
  const NetworkGraph& net = *net_;
  const auto& taps = net.tap_indices();
  if (tap_grads.size() != taps.size()) {
    throw DataError("expected " + std::to_string(taps.size()) + " tap gradients, got " +
                    std::to_string(tap_grads.size()));
  }

  const auto& nodes = net.nodes();
  std::vector<BasicTensor<T>> grads(nodes.size());
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const Shape& shape = net.output_shape(taps[t]);
    const auto& g = tap_grads[t];
    if (g.channels != shape[0] || g.samples != shape[1] * shape[2] ||
        g.data.size() != g.channels * g.samples) {
      throw DataError("tap gradient " + std::to_string(t) + " does not match tap shape " +
                      shape_to_string(shape));
    }
    accumulate(grads[taps[t]], BasicTensor<T>(shape, g.data));
  }

  BasicTensor<T> image_grad(image.shape());
  const auto input_shape = [&](std::size_t j) -> const Shape& {
    return j == NetworkGraph::kInput ? image.shape() : net.output_shape(j);
  };
  const auto route = [&](std::size_t j, BasicTensor<T>&& g) {
    if (j == NetworkGraph::kInput) {
      accumulate(image_grad, std::move(g));
    } else {
      accumulate(grads[j], std::move(g));
    }
  };

  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (grads[i].empty()) continue;
    BasicTensor<T> g = std::move(grads[i]);
    grads[i] = {};
    const LayerNode& node = nodes[i];
    const auto& in = net.input_indices(i);
    switch (node.kind) {
      case LayerKind::kConv2d: {
        const auto& p = std::get<Conv2dParams>(node.params);
        route(in[0], conv2d_backward_input(g, p.weight, input_shape(in[0]), p.stride, p.padding));
        break;
      }
      case LayerKind::kRelu:
        route(in[0], relu_backward(retained_[i], g));
        break;
      case LayerKind::kMaxPool:
        route(in[0], max_pool2d_backward(g, argmax_[i], input_shape(in[0])));
        break;
      case LayerKind::kAvgPool:
        route(in[0], avg_pool2d_backward(g, input_shape(in[0]), std::get<PoolParams>(node.params)));
        break;
      case LayerKind::kBatchNorm:
        route(in[0], batch_norm_linear(g, std::get<BatchNormParams>(node.params)));
        break;
      case LayerKind::kAdd:
        for (std::size_t j : in) route(j, BasicTensor<T>(g));
        break;
      case LayerKind::kConcat: {
        std::vector<Shape> shapes;
        for (std::size_t j : in) shapes.push_back(input_shape(j));
        auto parts = concat_backward(g, shapes);
        for (std::size_t k = 0; k < in.size(); ++k) route(in[k], std::move(parts[k]));
        break;
      }
    }
  }
  return image_grad;
}

template <typename T>
std::vector<BasicFeatureMap<T>> BasicSession<T>::tangent(const BasicTensor<T>& direction) const {
  if (!has_forward_) throw DataError("tangent called without a preceding forward pass");
  if (direction.shape() != image_.shape()) throw DataError("tangent direction shape mismatch");
  const NetworkGraph& net = *net_;
  const auto& nodes = net.nodes();
  std::vector<BasicTensor<T>> tan(nodes.size());

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!net.is_required(i)) continue;
    const LayerNode& node = nodes[i];
    std::vector<const BasicTensor<T>*> in;
    for (std::size_t j : net.input_indices(i)) {
      in.push_back(j == NetworkGraph::kInput ? &direction : &tan[j]);
    }
    switch (node.kind) {
      case LayerKind::kConv2d: {
        const auto& p = std::get<Conv2dParams>(node.params);
        tan[i] = conv2d(*in[0], p.weight, p.stride, p.padding);
        break;
      }
      case LayerKind::kRelu:
        tan[i] = relu_backward(retained_[i], *in[0]);
        break;
      case LayerKind::kMaxPool:
        tan[i] = max_pool2d_tangent(*in[0], argmax_[i], net.output_shape(i));
        break;
      case LayerKind::kAvgPool:
        tan[i] = avg_pool2d(*in[0], std::get<PoolParams>(node.params));
        break;
      case LayerKind::kBatchNorm:
        tan[i] = batch_norm_linear(*in[0], std::get<BatchNormParams>(node.params));
        break;
      case LayerKind::kAdd:
        tan[i] = add<T>(in);
        break;
      case LayerKind::kConcat:
        tan[i] = concat<T>(in);
        break;
    }
  }

  std::vector<BasicFeatureMap<T>> out;
  for (std::size_t t : net.tap_indices()) out.push_back(to_feature_map(nodes[t].name, tan[t]));
  return out;
}

template <typename T>
std::uint64_t BasicSession<T>::activation_pattern() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  const auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (std::size_t i = 0; i < retained_.size(); ++i) {
    for (const T v : retained_[i].data()) mix(v > T(0) ? 1 : 0);
    for (const std::uint32_t a : argmax_[i]) mix(a);
  }
  return h;
}

template class BasicSession<float>;
template class BasicSession<double>;

}  // namespace texgram::engine
