#include "texgram/synthesis/synthesize.hpp"

#include <sstream>

#include "texgram/error.hpp"
#include "texgram/synthesis/random.hpp"

namespace texgram::synthesis {

void SynthesisConfig::validate() const {
  lbfgs_options().validate();
  for (double w : layer_weights) {
    if (!(w >= 0.0)) throw ConfigError("layer weights must be nonnegative");
  }
}

LbfgsOptions SynthesisConfig::lbfgs_options() const {
  LbfgsOptions o;
  o.max_iterations = max_iterations;
  o.history_size = history_size;
  o.wolfe_c1 = wolfe_c1;
  o.wolfe_c2 = wolfe_c2;
  o.grad_tolerance = grad_tolerance;
  return o;
}

SynthesisResult synthesize_texture(const engine::NetworkGraph& net, const Tensor& exemplar,
                                   const SynthesisConfig& config) {
  return synthesize_texture_from(net, exemplar, gaussian_noise(net.input_spec().shape, config.seed),
                                 config);
}

SynthesisResult synthesize_texture_from(const engine::NetworkGraph& net, const Tensor& exemplar,
                                        const Tensor& initial, const SynthesisConfig& config) {
  config.validate();
  if (initial.shape() != net.input_spec().shape) {
    throw DataError("initial image shape does not match the network input spec");
  }
  const auto targets = tap_grams(net, exemplar);
  if (!config.layer_weights.empty() && config.layer_weights.size() != targets.size()) {
    throw ConfigError("layer_weights needs one entry per tap");
  }

  engine::Session session(net, engine::Retention::kForBackward);
  const Shape& shape = net.input_spec().shape;
  std::vector<std::vector<double>> per_layer_by_eval;

  const Objective objective = [&](std::span<const double> x, std::span<double> grad) {
    Tensor image(shape, std::vector<float>(x.begin(), x.end()));
    auto [report, pixel_grad] =
        gram_loss_and_gradient<float>(session, image, targets, config.layer_weights);
    std::copy(pixel_grad.data().begin(), pixel_grad.data().end(), grad.begin());
    per_layer_by_eval.push_back(std::move(report.per_layer));
    return report.total;
  };

  const auto& init = initial.storage();
  LbfgsResult run =
      lbfgs_minimize(objective, std::vector<double>(init.begin(), init.end()),
                     config.lbfgs_options());

  SynthesisResult out;
  out.image = Tensor(shape, std::vector<float>(run.x.begin(), run.x.end()));
  out.status = run.status;
  out.iterations = run.iterations;
  out.report.trace = run.trace;
  for (std::size_t e : run.trace_evaluation) out.per_layer_trace.push_back(per_layer_by_eval[e]);
  out.report.per_layer = out.per_layer_trace.back();
  out.report.total = run.value;
  return out;
}

std::string loss_trace_csv(const SynthesisResult& result, const std::vector<std::string>& taps) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "iteration,total";
  for (const auto& t : taps) csv << ',' << t;
  csv << '\n';
  for (std::size_t i = 0; i < result.report.trace.size(); ++i) {
    csv << i << ',' << result.report.trace[i];
    for (double v : result.per_layer_trace[i]) csv << ',' << v;
    csv << '\n';
  }
  return csv.str();
}

}  // namespace texgram::synthesis
