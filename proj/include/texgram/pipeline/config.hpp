#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "texgram/infotheory.hpp"
#include "texgram/rdm.hpp"
#include "texgram/synthesis/synthesize.hpp"

namespace texgram::pipeline {

struct ModelEntry {
  std::string name;  // must match the Brain-Score CSV when correlating
  std::filesystem::path bundle;
  std::vector<std::string> taps;  // empty = taps stored in the bundle
};

struct SynthesisSettings {
  std::string model;  // empty = first configured model
  std::filesystem::path exemplar;
  synthesis::SynthesisConfig config;
};

struct FigureOptions {
  std::size_t heatmap_max_size = 1024;  // larger RDMs are block-averaged
};

struct PipelineConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  std::filesystem::path brainscore_csv;  // optional
  std::vector<ModelEntry> models;
  DistanceVariant distance = DistanceVariant::kUpperTriangle;
  bool standardize = false;
  EntropyMethod mi_method = EntropyMethod::kNsb;
  std::optional<std::size_t> k;     // default: number of classes
  std::optional<std::size_t> layer; // restricts rdm/cluster/mi to one tap (1-based)
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  SynthesisSettings synthesis;
  FigureOptions figures;

  void validate() const;
};

// JSON mirror of PipelineConfig. Relative paths resolve against the
// directory holding the file; unknown keys are rejected with ConfigError.
//   {"dataset", "cache", "output", "brainscore_csv",
//    "models": [{"name", "bundle", "taps"}], "distance", "standardize",
//    "mi_method", "k", "layer", "seed", "workers",
//    "synthesis": {"model", "exemplar", "max_iterations", "history_size",
//                  "wolfe_c1", "wolfe_c2", "grad_tolerance", "layer_weights"},
//    "figures": {"heatmap_max_size"}}
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Command-line values that take precedence over the file.
struct ConfigOverrides {
  std::optional<std::string> model;  // keep only this model
  std::optional<std::size_t> layer;
  std::optional<std::size_t> k;
  std::optional<std::string> mi_method;
  std::optional<std::string> distance;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

void apply_overrides(PipelineConfig& config, const ConfigOverrides& overrides);

}  // namespace texgram::pipeline
