#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "texgram/engine/layers.hpp"
#include "texgram/tensor.hpp"

// Layer kernels on C x H x W tensors. Activations are templated (float for
// inference, double for numerical verification); parameters are always the
// float tensors stored in the network. Reductions accumulate in double.
namespace texgram::engine {

// floor((in + 2 pad - kernel) / stride) + 1; throws DataError when that is
// not a positive extent.
std::size_t output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                          std::size_t pad);

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const Tensor& kernel, Pair stride,
                      Pair padding, const Tensor* bias = nullptr);

// Adjoint of conv2d with respect to its input.
template <typename T>
BasicTensor<T> conv2d_backward_input(const BasicTensor<T>& grad_output, const Tensor& kernel,
                                     const Shape& input_shape, Pair stride, Pair padding);

// Gradient with respect to the kernel (K x C x kh x kw).
template <typename T>
BasicTensor<double> conv2d_backward_weight(const BasicTensor<T>& input,
                                           const BasicTensor<T>& grad_output,
                                           const Shape& kernel_shape, Pair stride,
                                           Pair padding);

template <typename T>
BasicTensor<double> conv2d_backward_bias(const BasicTensor<T>& grad_output);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input);

// Passes grad where the forward output was positive, exact zero elsewhere.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_output);

// `argmax` receives, per output element, the flat input index of the first
// maximal element of its window (row-major scan).
template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& input, const PoolParams& params,
                          std::vector<std::uint32_t>* argmax = nullptr);

template <typename T>
BasicTensor<T> max_pool2d_backward(const BasicTensor<T>& grad_output,
                                   std::span<const std::uint32_t> argmax,
                                   const Shape& input_shape);

// Gathers `direction` at the recorded argmax positions (the pool's derivative).
template <typename T>
BasicTensor<T> max_pool2d_tangent(const BasicTensor<T>& direction,
                                  std::span<const std::uint32_t> argmax,
                                  const Shape& output_shape);

template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& input, const PoolParams& params);

template <typename T>
BasicTensor<T> avg_pool2d_backward(const BasicTensor<T>& grad_output, const Shape& input_shape,
                                   const PoolParams& params);

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& input, const BatchNormParams& params);

// Multiplies each channel by scale / sqrt(var + eps); this is both the
// backward and the tangent map of inference-mode batch norm.
template <typename T>
BasicTensor<T> batch_norm_linear(const BasicTensor<T>& input, const BatchNormParams& params);

template <typename T>
BasicTensor<T> add(std::span<const BasicTensor<T>* const> inputs);

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>* const> inputs);

// Splits a channel-concatenated gradient back into per-input pieces.
template <typename T>
std::vector<BasicTensor<T>> concat_backward(const BasicTensor<T>& grad_output,
                                            std::span<const Shape> input_shapes);

}  // namespace texgram::engine
