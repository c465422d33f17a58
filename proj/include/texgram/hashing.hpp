#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace texgram {

// Incremental SHA-256, hex-encoded digests.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const char> bytes);
  Sha256& update(std::string_view text);
  Sha256& update(const std::string& text) { return update(std::string_view(text)); }
  Sha256& update(const char* text) { return update(std::string_view(text)); }
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::span<const char> bytes);
std::string sha256_hex(std::string_view text);
inline std::string sha256_hex(const std::string& text) { return sha256_hex(std::string_view(text)); }
std::string sha256_file(const std::filesystem::path& path);

}  // namespace texgram
