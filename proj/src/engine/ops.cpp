#include "texgram/engine/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "texgram/error.hpp"

namespace texgram::engine {

std::size_t output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                          std::size_t pad) {
  if (stride == 0) throw DataError("stride must be positive");
  const auto padded = static_cast<long long>(in + 2 * pad);
  const auto k = static_cast<long long>(kernel);
  if (kernel == 0 || padded < k) {
    throw DataError("nonpositive output extent: input " + std::to_string(in) + ", kernel " +
                    std::to_string(kernel) + ", padding " + std::to_string(pad));
  }
  return static_cast<std::size_t>((padded - k) / static_cast<long long>(stride)) + 1;
}

namespace {

void require_rank3(const Shape& shape, const char* what) {
  if (shape.size() != 3) {
    throw DataError(std::string(what) + " expects a C x H x W tensor, got " +
                    shape_to_string(shape));
  }
}

// Output indices o in [lo, hi) whose input coordinate o*stride - pad + offset
// lies inside [0, in).
struct Span1d {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

Span1d valid_outputs(std::size_t out, std::size_t in, std::size_t stride, std::size_t pad,
                     std::size_t offset) {
  const long long p = static_cast<long long>(pad) - static_cast<long long>(offset);
  const long long s = static_cast<long long>(stride);
  // o*s - p >= 0  and  o*s - p <= in - 1
  long long lo = p > 0 ? (p + s - 1) / s : 0;
  long long hi_incl = (static_cast<long long>(in) - 1 + p);
  hi_incl = hi_incl < 0 ? -1 : hi_incl / s;
  lo = std::max(lo, 0LL);
  hi_incl = std::min(hi_incl, static_cast<long long>(out) - 1);
  if (hi_incl < lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi_incl + 1)};
}

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t filters, kh, kw;
  std::size_t out_h, out_w;
  std::vector<Span1d> rows;  // per ky
  std::vector<Span1d> cols;  // per kx
};

ConvGeometry conv_geometry(const Shape& input, const Shape& kernel, Pair stride, Pair padding) {
  require_rank3(input, "conv2d");
  if (kernel.size() != 4) {
    throw DataError("conv2d kernel must be K x C x kh x kw, got " + shape_to_string(kernel));
  }
  if (kernel[1] != input[0]) {
    throw DataError("conv2d channel mismatch: kernel expects " + std::to_string(kernel[1]) +
                    " channels, input has " + std::to_string(input[0]));
  }
  ConvGeometry g{input[0], input[1], input[2], kernel[0], kernel[2], kernel[3], 0, 0, {}, {}};
  g.out_h = output_extent(g.height, g.kh, stride.h, padding.h);
  g.out_w = output_extent(g.width, g.kw, stride.w, padding.w);
  for (std::size_t ky = 0; ky < g.kh; ++ky) {
    g.rows.push_back(valid_outputs(g.out_h, g.height, stride.h, padding.h, ky));
  }
  for (std::size_t kx = 0; kx < g.kw; ++kx) {
    g.cols.push_back(valid_outputs(g.out_w, g.width, stride.w, padding.w, kx));
  }
  return g;
}

template <typename T>
BasicTensor<T> narrow(const std::vector<double>& acc, Shape shape) {
  return BasicTensor<T>(std::move(shape), std::vector<T>(acc.begin(), acc.end()));
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const Tensor& kernel, Pair stride,
                      Pair padding, const Tensor* bias) {
  const auto g = conv_geometry(input.shape(), kernel.shape(), stride, padding);
  if (bias && !bias->empty() && bias->size() != g.filters) {
    throw DataError("conv2d bias length does not match filter count");
  }
  const std::size_t plane = g.out_h * g.out_w;
  std::vector<double> acc(g.filters * plane, 0.0);
  const T* in = input.data().data();
  const float* w = kernel.data().data();

  for (std::size_t k = 0; k < g.filters; ++k) {
    double* out = acc.data() + k * plane;
    if (bias && !bias->empty()) std::fill(out, out + plane, static_cast<double>((*bias)[k]));
    for (std::size_t c = 0; c < g.channels; ++c) {
      const T* in_c = in + c * g.height * g.width;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const Span1d rows = g.rows[ky];
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const Span1d cols = g.cols[kx];
          const double wv = w[((k * g.channels + c) * g.kh + ky) * g.kw + kx];
          for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
            const std::size_t iy = oy * stride.h + ky - padding.h;
            const T* in_row = in_c + iy * g.width;
            double* out_row = out + oy * g.out_w;
            for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
              out_row[ox] += wv * static_cast<double>(in_row[ox * stride.w + kx - padding.w]);
            }
          }
        }
      }
    }
  }
  return narrow<T>(acc, {g.filters, g.out_h, g.out_w});
}

template <typename T>
BasicTensor<T> conv2d_backward_input(const BasicTensor<T>& grad_output, const Tensor& kernel,
                                     const Shape& input_shape, Pair stride, Pair padding) {
  const auto g = conv_geometry(input_shape, kernel.shape(), stride, padding);
  if (grad_output.shape() != Shape{g.filters, g.out_h, g.out_w}) {
    throw DataError("conv2d backward: gradient shape " + shape_to_string(grad_output.shape()) +
                    " does not match output shape");
  }
  std::vector<double> acc(g.channels * g.height * g.width, 0.0);
  const T* gout = grad_output.data().data();
  const float* w = kernel.data().data();
  const std::size_t plane = g.out_h * g.out_w;

  for (std::size_t k = 0; k < g.filters; ++k) {
    const T* gk = gout + k * plane;
    for (std::size_t c = 0; c < g.channels; ++c) {
      double* in_c = acc.data() + c * g.height * g.width;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const Span1d rows = g.rows[ky];
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const Span1d cols = g.cols[kx];
          const double wv = w[((k * g.channels + c) * g.kh + ky) * g.kw + kx];
          for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
            double* in_row = in_c + (oy * stride.h + ky - padding.h) * g.width;
            const T* g_row = gk + oy * g.out_w;
            for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
              in_row[ox * stride.w + kx - padding.w] += wv * static_cast<double>(g_row[ox]);
            }
          }
        }
      }
    }
  }
  return narrow<T>(acc, input_shape);
}

template <typename T>
BasicTensor<double> conv2d_backward_weight(const BasicTensor<T>& input,
                                           const BasicTensor<T>& grad_output,
                                           const Shape& kernel_shape, Pair stride,
                                           Pair padding) {
  const auto g = conv_geometry(input.shape(), kernel_shape, stride, padding);
  BasicTensor<double> grad(kernel_shape);
  const T* in = input.data().data();
  const T* gout = grad_output.data().data();
  const std::size_t plane = g.out_h * g.out_w;

  for (std::size_t k = 0; k < g.filters; ++k) {
    const T* gk = gout + k * plane;
    for (std::size_t c = 0; c < g.channels; ++c) {
      const T* in_c = in + c * g.height * g.width;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const Span1d rows = g.rows[ky];
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const Span1d cols = g.cols[kx];
          double sum = 0.0;
          for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
            const T* in_row = in_c + (oy * stride.h + ky - padding.h) * g.width;
            const T* g_row = gk + oy * g.out_w;
            for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
              sum += static_cast<double>(g_row[ox]) *
                     static_cast<double>(in_row[ox * stride.w + kx - padding.w]);
            }
          }
          grad[((k * g.channels + c) * g.kh + ky) * g.kw + kx] = sum;
        }
      }
    }
  }
  return grad;
}

template <typename T>
BasicTensor<double> conv2d_backward_bias(const BasicTensor<T>& grad_output) {
  require_rank3(grad_output.shape(), "conv2d bias gradient");
  const std::size_t k = grad_output.extent(0);
  const std::size_t plane = grad_output.extent(1) * grad_output.extent(2);
  BasicTensor<double> grad({k});
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < plane; ++j) sum += grad_output[i * plane + j];
    grad[i] = sum;
  }
  return grad;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (T& v : out.data()) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_output) {
  if (output.shape() != grad_output.shape()) throw DataError("relu backward: shape mismatch");
  BasicTensor<T> grad(output.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = output[i] > T(0) ? grad_output[i] : T(0);
  }
  return grad;
}

namespace {

struct PoolGeometry {
  std::size_t channels, height, width, out_h, out_w;
};

PoolGeometry pool_geometry(const Shape& input, const PoolParams& p) {
  require_rank3(input, "pool");
  return {input[0], input[1], input[2],
          output_extent(input[1], p.kernel.h, p.stride.h, p.padding.h),
          output_extent(input[2], p.kernel.w, p.stride.w, p.padding.w)};
}

// Calls fn(flat_input_index) for every in-bounds element of the window of
// output (oy, ox) in channel c, row-major.
template <typename Fn>
void for_window(const PoolGeometry& g, const PoolParams& p, std::size_t c, std::size_t oy,
                std::size_t ox, Fn&& fn) {
  const long long y0 = static_cast<long long>(oy * p.stride.h) - static_cast<long long>(p.padding.h);
  const long long x0 = static_cast<long long>(ox * p.stride.w) - static_cast<long long>(p.padding.w);
  for (long long y = y0; y < y0 + static_cast<long long>(p.kernel.h); ++y) {
    if (y < 0 || y >= static_cast<long long>(g.height)) continue;
    for (long long x = x0; x < x0 + static_cast<long long>(p.kernel.w); ++x) {
      if (x < 0 || x >= static_cast<long long>(g.width)) continue;
      fn((c * g.height + static_cast<std::size_t>(y)) * g.width + static_cast<std::size_t>(x));
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& input, const PoolParams& params,
                          std::vector<std::uint32_t>* argmax) {
  const auto g = pool_geometry(input.shape(), params);
  BasicTensor<T> out({g.channels, g.out_h, g.out_w});
  if (argmax) argmax->assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_index = std::numeric_limits<std::size_t>::max();
        for_window(g, params, c, oy, ox, [&](std::size_t i) {
          if (best_index == std::numeric_limits<std::size_t>::max() || input[i] > best) {
            best = input[i];
            best_index = i;
          }
        });
        if (best_index == std::numeric_limits<std::size_t>::max()) {
          throw DataError("max pool window lies entirely in padding");
        }
        out[o] = best;
        if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best_index);
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> max_pool2d_backward(const BasicTensor<T>& grad_output,
                                   std::span<const std::uint32_t> argmax,
                                   const Shape& input_shape) {
  if (argmax.size() != grad_output.size()) throw DataError("max pool backward: shape mismatch");
  std::vector<double> acc(shape_product(input_shape), 0.0);
  for (std::size_t o = 0; o < argmax.size(); ++o) acc[argmax[o]] += grad_output[o];
  return narrow<T>(acc, input_shape);
}

template <typename T>
BasicTensor<T> max_pool2d_tangent(const BasicTensor<T>& direction,
                                  std::span<const std::uint32_t> argmax,
                                  const Shape& output_shape) {
  BasicTensor<T> out(output_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) out[o] = direction[argmax[o]];
  return out;
}

template <typename T>
BasicTensor<T> avg_pool2d(const BasicTensor<T>& input, const PoolParams& params) {
  const auto g = pool_geometry(input.shape(), params);
  const double inv_area = 1.0 / static_cast<double>(params.kernel.h * params.kernel.w);
  BasicTensor<T> out({g.channels, g.out_h, g.out_w});
  std::size_t o = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox, ++o) {
        double sum = 0.0;
        for_window(g, params, c, oy, ox, [&](std::size_t i) { sum += input[i]; });
        out[o] = static_cast<T>(sum * inv_area);
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> avg_pool2d_backward(const BasicTensor<T>& grad_output, const Shape& input_shape,
                                   const PoolParams& params) {
  const auto g = pool_geometry(input_shape, params);
  if (grad_output.shape() != Shape{g.channels, g.out_h, g.out_w}) {
    throw DataError("avg pool backward: shape mismatch");
  }
  const double inv_area = 1.0 / static_cast<double>(params.kernel.h * params.kernel.w);
  std::vector<double> acc(shape_product(input_shape), 0.0);
  std::size_t o = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox, ++o) {
        const double share = static_cast<double>(grad_output[o]) * inv_area;
        for_window(g, params, c, oy, ox, [&](std::size_t i) { acc[i] += share; });
      }
    }
  }
  return narrow<T>(acc, input_shape);
}

namespace {

void check_batch_norm(const Shape& input, const BatchNormParams& p) {
  require_rank3(input, "batch norm");
  const std::size_t c = input[0];
  if (p.mean.size() != c || p.variance.size() != c || p.scale.size() != c ||
      p.shift.size() != c) {
    throw DataError("batch norm statistics do not match channel count " + std::to_string(c));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& input, const BatchNormParams& params) {
  check_batch_norm(input.shape(), params);
  BasicTensor<T> out(input.shape());
  const std::size_t plane = input.extent(1) * input.extent(2);
  for (std::size_t c = 0; c < input.extent(0); ++c) {
    const double gain = params.scale[c] / std::sqrt(static_cast<double>(params.variance[c]) +
                                                    params.epsilon);
    const double mean = params.mean[c];
    const double shift = params.shift[c];
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      out[i] = static_cast<T>((static_cast<double>(input[i]) - mean) * gain + shift);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> batch_norm_linear(const BasicTensor<T>& input, const BatchNormParams& params) {
  check_batch_norm(input.shape(), params);
  BasicTensor<T> out(input.shape());
  const std::size_t plane = input.extent(1) * input.extent(2);
  for (std::size_t c = 0; c < input.extent(0); ++c) {
    const double gain = params.scale[c] / std::sqrt(static_cast<double>(params.variance[c]) +
                                                    params.epsilon);
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      out[i] = static_cast<T>(static_cast<double>(input[i]) * gain);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> add(std::span<const BasicTensor<T>* const> inputs) {
  if (inputs.empty()) throw DataError("add needs at least one input");
  std::vector<double> acc(inputs[0]->size(), 0.0);
  for (const auto* t : inputs) {
    if (t->shape() != inputs[0]->shape()) {
      throw DataError("add: input shapes differ (" + shape_to_string(t->shape()) + " vs " +
                      shape_to_string(inputs[0]->shape()) + ")");
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (*t)[i];
  }
  return narrow<T>(acc, inputs[0]->shape());
}

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>* const> inputs) {
  if (inputs.empty()) throw DataError("concat needs at least one input");
  std::size_t channels = 0;
  for (const auto* t : inputs) {
    require_rank3(t->shape(), "concat");
    if (t->extent(1) != inputs[0]->extent(1) || t->extent(2) != inputs[0]->extent(2)) {
      throw DataError("concat: spatial extents differ");
    }
    channels += t->extent(0);
  }
  std::vector<T> data;
  data.reserve(channels * inputs[0]->extent(1) * inputs[0]->extent(2));
  for (const auto* t : inputs) data.insert(data.end(), t->data().begin(), t->data().end());
  return BasicTensor<T>({channels, inputs[0]->extent(1), inputs[0]->extent(2)}, std::move(data));
}

template <typename T>
std::vector<BasicTensor<T>> concat_backward(const BasicTensor<T>& grad_output,
                                            std::span<const Shape> input_shapes) {
  std::vector<BasicTensor<T>> grads;
  std::size_t offset = 0;
  for (const Shape& s : input_shapes) {
    const std::size_t n = shape_product(s);
    if (offset + n > grad_output.size()) throw DataError("concat backward: shape mismatch");
    const auto first = grad_output.data().begin() + static_cast<std::ptrdiff_t>(offset);
    grads.emplace_back(s, std::vector<T>(first, first + static_cast<std::ptrdiff_t>(n)));
    offset += n;
  }
  if (offset != grad_output.size()) throw DataError("concat backward: shape mismatch");
  return grads;
}

#define TEXGRAM_INSTANTIATE_OPS(T)                                                           \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const Tensor&, Pair, Pair,           \
                                 const Tensor*);                                             \
  template BasicTensor<T> conv2d_backward_input(const BasicTensor<T>&, const Tensor&,        \
                                                const Shape&, Pair, Pair);                   \
  template BasicTensor<double> conv2d_backward_weight(const BasicTensor<T>&,                 \
                                                      const BasicTensor<T>&, const Shape&,   \
                                                      Pair, Pair);                           \
  template BasicTensor<double> conv2d_backward_bias(const BasicTensor<T>&);                  \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                       \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> max_pool2d(const BasicTensor<T>&, const PoolParams&,               \
                                     std::vector<std::uint32_t>*);                           \
  template BasicTensor<T> max_pool2d_backward(const BasicTensor<T>&,                         \
                                              std::span<const std::uint32_t>, const Shape&); \
  template BasicTensor<T> max_pool2d_tangent(const BasicTensor<T>&,                          \
                                             std::span<const std::uint32_t>, const Shape&);  \
  template BasicTensor<T> avg_pool2d(const BasicTensor<T>&, const PoolParams&);              \
  template BasicTensor<T> avg_pool2d_backward(const BasicTensor<T>&, const Shape&,           \
                                              const PoolParams&);                            \
  template BasicTensor<T> batch_norm(const BasicTensor<T>&, const BatchNormParams&);         \
  template BasicTensor<T> batch_norm_linear(const BasicTensor<T>&, const BatchNormParams&);  \
  template BasicTensor<T> add(std::span<const BasicTensor<T>* const>);                       \
  template BasicTensor<T> concat(std::span<const BasicTensor<T>* const>);                    \
  template std::vector<BasicTensor<T>> concat_backward(const BasicTensor<T>&,                \
                                                       std::span<const Shape>);

TEXGRAM_INSTANTIATE_OPS(float)
TEXGRAM_INSTANTIATE_OPS(double)

#undef TEXGRAM_INSTANTIATE_OPS

}  // namespace texgram::engine
