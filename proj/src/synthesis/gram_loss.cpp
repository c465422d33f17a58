#include "texgram/synthesis/gram_loss.hpp"

#include <string>

#include "texgram/error.hpp"

namespace texgram::synthesis {

double layer_gram_loss(const GramMatrix& synthesized, const GramMatrix& target,
                       std::size_t samples, std::size_t channels) {
  if (synthesized.n != target.n || synthesized.n != channels) {
    throw DataError("Gram loss dimension mismatch: " + std::to_string(synthesized.n) + " vs " +
                    std::to_string(target.n) + " (N = " + std::to_string(channels) + ")");
  }
  if (samples == 0) throw DataError("Gram loss needs at least one spatial sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < synthesized.values.size(); ++i) {
    const double d = synthesized.values[i] - target.values[i];
    sum += d * d;
  }
  const double n = static_cast<double>(channels);
  return sum / (4.0 * static_cast<double>(samples) * n * n);
}

template <typename T>
std::pair<LossReport, BasicTensor<T>> gram_loss_and_gradient(
    engine::BasicSession<T>& session, const BasicTensor<T>& image,
    std::span<const GramMatrix> targets, std::span<const double> weights) {
  const std::size_t tap_count = session.network().taps().size();
  if (targets.size() != tap_count) {
    throw DataError("expected " + std::to_string(tap_count) + " Gram targets, got " +
                    std::to_string(targets.size()));
  }
  if (!weights.empty() && weights.size() != tap_count) {
    throw DataError("expected " + std::to_string(tap_count) + " layer weights, got " +
                    std::to_string(weights.size()));
  }

  const auto taps = session.forward(image);
  LossReport report;
  std::vector<engine::BasicFeatureMap<T>> tap_grads;
  tap_grads.reserve(taps.size());

  for (std::size_t t = 0; t < taps.size(); ++t) {
    const auto& f = taps[t];
    const double w = weights.empty() ? 1.0 : weights[t];
    const GramMatrix g = gram_matrix(f);
    const std::size_t n = f.channels;
    const std::size_t m = f.samples;
    report.per_layer.push_back(w * layer_gram_loss(g, targets[t], m, n));
    report.total += report.per_layer.back();

    const double coef = w / (static_cast<double>(m) * static_cast<double>(n) * n);
    std::vector<double> diff(n * n);
    for (std::size_t i = 0; i < n * n; ++i) diff[i] = coef * (g.values[i] - targets[t].values[i]);

    engine::BasicFeatureMap<T> grad{f.layer_name, n, m, std::vector<T>(n * m)};
    std::vector<double> row(m);
    for (std::size_t a = 0; a < n; ++a) {
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double d = diff[a * n + j];
        if (d == 0.0) continue;
        const T* fj = f.data.data() + j * m;
        for (std::size_t k = 0; k < m; ++k) row[k] += d * static_cast<double>(fj[k]);
      }
      for (std::size_t k = 0; k < m; ++k) grad.data[a * m + k] = static_cast<T>(row[k]);
    }
    tap_grads.push_back(std::move(grad));
  }

  auto pixel_grad = session.backward(image, tap_grads);
  return {std::move(report), std::move(pixel_grad)};
}

template std::pair<LossReport, BasicTensor<float>> gram_loss_and_gradient(
    engine::BasicSession<float>&, const BasicTensor<float>&, std::span<const GramMatrix>,
    std::span<const double>);
template std::pair<LossReport, BasicTensor<double>> gram_loss_and_gradient(
    engine::BasicSession<double>&, const BasicTensor<double>&, std::span<const GramMatrix>,
    std::span<const double>);

std::vector<GramMatrix> tap_grams(const engine::NetworkGraph& net, const Tensor& image) {
  std::vector<GramMatrix> out;
  for (const auto& f : engine::forward_with_taps(net, image)) out.push_back(gram_matrix(f));
  return out;
}

}  // namespace texgram::synthesis
