#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace texgram::io {

// All on-disk binary formats are little-endian; the library only builds on
// little-endian hosts.

// 16-byte record header shared by the Gram, feature-map and tensor records.
struct RecordHeader {
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  std::uint32_t field0 = 0;
  std::uint32_t field1 = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const char> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

std::vector<float> floats_from_bytes(std::span<const char> bytes);
std::span<const char> as_bytes(std::span<const float> values);

void append_header(std::vector<char>& out, const RecordHeader& header);
RecordHeader parse_header(std::span<const char> bytes, std::string_view magic,
                          const std::filesystem::path& origin);

}  // namespace texgram::io
