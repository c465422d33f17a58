#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texgram/engine/network.hpp"
#include "texgram/synthesis/gram_loss.hpp"
#include "texgram/synthesis/lbfgs.hpp"

namespace texgram::synthesis {

struct SynthesisConfig {
  std::uint64_t seed = 0;
  std::size_t max_iterations = 1000;
  std::size_t history_size = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double grad_tolerance = 1e-7;
  std::vector<double> layer_weights;  // empty = 1 for every tap

  void validate() const;
  LbfgsOptions lbfgs_options() const;
};

struct SynthesisResult {
  Tensor image;  // normalized pixel space, unclamped
  LossReport report;
  std::vector<std::vector<double>> per_layer_trace;  // aligned with report.trace
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
  std::size_t iterations = 0;
};

// Matches the tap Gram matrices of `exemplar` starting from seeded standard
// Gaussian noise. Equal seed, config and exemplar give bit-identical output.
SynthesisResult synthesize_texture(const engine::NetworkGraph& net, const Tensor& exemplar,
                                   const SynthesisConfig& config);

// Same, from an explicit starting image.
SynthesisResult synthesize_texture_from(const engine::NetworkGraph& net, const Tensor& exemplar,
                                        const Tensor& initial, const SynthesisConfig& config);

// CSV with header iteration,total,<tap names...>.
std::string loss_trace_csv(const SynthesisResult& result, const std::vector<std::string>& taps);

}  // namespace texgram::synthesis
