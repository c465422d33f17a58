#include "texgram/pipeline/brainscore.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"

namespace texgram::pipeline {

namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    fields.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::vector<BrainScoreRecord> parse_brainscore_csv(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front().empty()) throw DataError("Brain-Score CSV: missing header");

  const auto header = split_fields(lines.front());
  std::vector<std::string> expected{"model"};
  for (std::string_view metric : kBrainScoreMetrics) expected.emplace_back(metric);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= header.size() || header[i] != expected[i]) {
      throw DataError("Brain-Score CSV: missing column '" + expected[i] + "' in header");
    }
  }
  if (header.size() != expected.size()) {
    throw DataError("Brain-Score CSV: unexpected column '" + header[expected.size()] + "'");
  }

  std::vector<BrainScoreRecord> records;
  std::set<std::string> seen;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string where = "Brain-Score CSV line " + std::to_string(row + 1);
    const auto fields = split_fields(lines[row]);
    if (fields.size() < expected.size()) {
      throw DataError(where + ": missing column '" + expected[fields.size()] + "'");
    }
    if (fields.size() > expected.size()) throw DataError(where + ": too many columns");
    BrainScoreRecord record;
    record.model = fields[0];
    if (record.model.empty()) throw DataError(where + ": empty model name");
    if (!seen.insert(record.model).second) {
      throw DataError(where + ": duplicate model '" + record.model + "'");
    }
    for (std::size_t m = 0; m < kBrainScoreMetrics.size(); ++m) {
      const std::string& cell = fields[m + 1];
      double value = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size() ||
          !std::isfinite(value)) {
        throw DataError(where + ": non-numeric value '" + cell + "' for " +
                        std::string(kBrainScoreMetrics[m]));
      }
      record.scores[m] = value;
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<BrainScoreRecord> ingest_brainscore_csv(const std::filesystem::path& path) {
  return parse_brainscore_csv(io::read_text(path));
}

}  // namespace texgram::pipeline
