#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "texgram/engine/layers.hpp"
#include "texgram/tensor.hpp"

namespace texgram::engine {

// Reserved node name that refers to the (preprocessed) input image.
inline constexpr std::string_view kInputName = "input";

struct InputSpec {
  Shape shape{3, 224, 224};
  std::array<float, 3> mean{0.f, 0.f, 0.f};
  std::array<float, 3> std{1.f, 1.f, 1.f};
};

// Validated, immutable CNN graph. Construction checks topological order,
// input references, parameter completeness and channel agreement by running
// shape inference from the input spec.
class NetworkGraph {
 public:
  NetworkGraph(std::string model_name, InputSpec input_spec, std::vector<LayerNode> nodes,
               std::vector<std::string> taps);

  const std::string& model_name() const noexcept { return model_name_; }
  const InputSpec& input_spec() const noexcept { return input_spec_; }
  const std::vector<LayerNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::string>& taps() const noexcept { return taps_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  // Node input positions; kInput marks the image.
  static constexpr std::size_t kInput = static_cast<std::size_t>(-1);
  const std::vector<std::size_t>& input_indices(std::size_t node) const {
    return input_indices_[node];
  }
  const Shape& output_shape(std::size_t node) const { return shapes_[node]; }
  const std::vector<std::size_t>& tap_indices() const noexcept { return tap_indices_; }

  // True when the node lies on some tap-to-input path, i.e. it must be
  // evaluated to produce the taps.
  bool is_required(std::size_t node) const { return required_[node]; }

  // Copy of this graph with a different tap list.
  NetworkGraph with_taps(std::vector<std::string> taps) const;

 private:
  std::string model_name_;
  InputSpec input_spec_;
  std::vector<LayerNode> nodes_;
  std::vector<std::string> taps_;
  std::vector<std::vector<std::size_t>> input_indices_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> tap_indices_;
  std::vector<bool> required_;
};

}  // namespace texgram::engine
