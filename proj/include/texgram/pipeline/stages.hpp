#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "texgram/pipeline/config.hpp"

namespace texgram::pipeline {

enum class Stage { kExtract, kGram, kRdm, kCluster, kMi, kCorrelate, kSynthesize, kReport };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);  // ConfigError on unknown names

struct StageResult {
  Stage stage = Stage::kExtract;
  // Cache entry directories for the bulk stages (extract, gram, rdm); files
  // under <output>/<stage>/ for the others.
  std::vector<std::filesystem::path> outputs;
};

// Runs one stage, computing any missing upstream artifacts first. Cached
// artifacts are reused when their inputs are unchanged and verified.
//   extract    dataset index and tap shapes per model
//   gram       one GRAM record per image and tap
//   rdm        RDM per model and layer
//   cluster    Ward dendrogram and cut into k clusters per model and layer
//   mi         plug-in and NSB MI per layer, best layer per model
//   correlate  best MI against the Brain-Score table
//   synthesize texture synthesis from the configured exemplar
//   report     heatmaps, MI-per-layer plot, correlation scatter, CSV tables
StageResult run_stage(const PipelineConfig& config, Stage stage);

}  // namespace texgram::pipeline
