#pragma once

#include <span>
#include <utility>
#include <vector>

#include "texgram/engine/session.hpp"
#include "texgram/gram.hpp"

namespace texgram::synthesis {

struct LossReport {
  std::vector<double> per_layer;  // weighted per-tap terms
  double total = 0.0;             // sum of per_layer
  std::vector<double> trace;      // total after each accepted iteration
};

// ||G_hat - G||_F^2 / (4 M N^2) over the full N x N matrices. With
// standardized independent activations the unweighted numerator has
// expectation 4 M N^2, so every layer contributes on the same scale.
double layer_gram_loss(const GramMatrix& synthesized, const GramMatrix& target,
                       std::size_t samples, std::size_t channels);

// Multi-tap Gram loss and its gradient with respect to the image. Each tap t
// contributes weights[t] * layer_gram_loss (weights empty = all ones); the
// gradient pushes dL/dG = w (G_hat - G) / (2 M N^2) through G_hat = F F^T,
// i.e. dL/dF = w (G_hat - G) F / (M N^2), and then through the network.
template <typename T>
std::pair<LossReport, BasicTensor<T>> gram_loss_and_gradient(
    engine::BasicSession<T>& session, const BasicTensor<T>& image,
    std::span<const GramMatrix> targets, std::span<const double> weights = {});

// Gram matrices of every tap of `image` (synthesis targets).
std::vector<GramMatrix> tap_grams(const engine::NetworkGraph& net, const Tensor& image);

}  // namespace texgram::synthesis
