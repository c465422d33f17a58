#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "texgram/stats.hpp"

namespace texgram::pipeline {

// Header must be exactly
//   model,average_vision,neural_vision,behavior_vision,V1,V2,V4,IT
std::vector<BrainScoreRecord> parse_brainscore_csv(std::string_view text);
std::vector<BrainScoreRecord> ingest_brainscore_csv(const std::filesystem::path& path);

}  // namespace texgram::pipeline
