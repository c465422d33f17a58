#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "texgram/engine/bundle.hpp"
#include "texgram/engine/records.hpp"
#include "texgram/error.hpp"
#include "texgram/pipeline/config.hpp"
#include "texgram/pipeline/stages.hpp"

namespace fs = std::filesystem;
using namespace texgram;

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct StageOptions {
  std::string config;
  std::optional<std::string> model;
  std::optional<std::size_t> layer;
  std::optional<std::size_t> k;
  std::optional<std::string> mi_method;
  std::optional<std::string> distance;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

int run_pipeline_stage(pipeline::Stage stage, const StageOptions& opts) {
  pipeline::PipelineConfig config = pipeline::load_config(opts.config);
  pipeline::ConfigOverrides overrides;
  overrides.model = opts.model;
  overrides.layer = opts.layer;
  overrides.k = opts.k;
  overrides.mi_method = opts.mi_method;
  overrides.distance = opts.distance;
  overrides.seed = opts.seed;
  if (opts.out) overrides.output_dir = fs::path(*opts.out);
  pipeline::apply_overrides(config, overrides);

  const pipeline::StageResult result = pipeline::run_stage(config, stage);
  for (const fs::path& p : result.outputs) std::cout << p.string() << '\n';
  return kOk;
}

int check_golden(const std::string& bundle, const std::string& golden, double tolerance) {
  const engine::NetworkGraph net = engine::load_model_bundle(bundle);
  bool ok = true;
  for (const engine::GoldenTapResult& r : engine::compare_golden(net, golden)) {
    const bool pass = r.relative_error < tolerance;
    ok = ok && pass;
    std::cout << fmt::format("{} {} channels={} max_abs_error={:.3e} relative_error={:.3e}\n",
                             pass ? "PASS" : "FAIL", r.layer_name, r.channels, r.max_abs_error,
                             r.relative_error);
  }
  if (!ok) throw NumericalError("golden activations differ beyond tolerance");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"texgram: Gram-matrix texture statistics pipeline"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  StageOptions opts;
  std::optional<pipeline::Stage> chosen;
  for (const char* name : {"extract", "gram", "rdm", "cluster", "mi", "correlate", "synthesize", "report"}) {
    CLI::App* sub = app.add_subcommand(name, fmt::format("Run the {} stage", name));
    sub->add_option("--config", opts.config, "Pipeline config (JSON)")->required();
    sub->add_option("--model", opts.model, "Restrict to one configured model");
    sub->add_option("--layer", opts.layer, "Restrict to one tap")->check(CLI::Range(1, 5));
    sub->add_option("--k", opts.k, "Number of clusters (default: number of classes)")->check(CLI::PositiveNumber);
    sub->add_option("--mi-method", opts.mi_method, "MI estimator for best-layer selection")
        ->check(CLI::IsMember({"plugin", "nsb"}));
    sub->add_option("--distance", opts.distance, "RDM distance")
        ->check(CLI::IsMember({"upper-tri", "full-frobenius"}));
    sub->add_option("--seed", opts.seed, "Random seed");
    sub->add_option("--out", opts.out, "Output directory");
    sub->callback([&chosen, name] { chosen = pipeline::parse_stage(name); });
  }

  std::string bundle, golden;
  double tolerance = 1e-3;
  CLI::App* golden_cmd = app.add_subcommand("check-golden", "Compare engine activations with golden records");
  golden_cmd->add_option("--bundle", bundle, "Model bundle directory")->required();
  golden_cmd->add_option("--golden", golden, "Golden record directory")->required();
  golden_cmd->add_option("--tolerance", tolerance, "Relative error bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (golden_cmd->parsed()) return check_golden(bundle, golden, tolerance);
    return run_pipeline_stage(*chosen, opts);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
}
