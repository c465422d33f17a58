#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace texgram::pipeline {

inline constexpr int kCacheFormatVersion = 1;

// A committed cache entry: `<root>/<stage>/<key>/` with a `manifest.json`
// listing every artifact and its SHA-256.
struct CacheEntry {
  std::string stage;
  std::string key;
  std::filesystem::path dir;
  // Digest of the manifest's artifact list; downstream keys depend on it so
  // any upstream content change invalidates them.
  std::string content_hash;

  std::filesystem::path file(const std::string& relative) const;
};

// Content-addressed stage cache. Keys are SHA-256 digests of the stage name,
// the cache format version and a canonical description of every input.
class StageCache {
 public:
  explicit StageCache(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  static std::string make_key(const std::string& stage, const std::string& description);

  // Validated entry, or nullopt. Entries with a missing, corrupt or
  // mismatched manifest, or artifacts whose digest changed, are stale: they
  // are deleted and reported as absent.
  std::optional<CacheEntry> lookup(const std::string& stage, const std::string& key) const;

  // Runs `build` in a scratch directory, records every regular file it wrote
  // and moves the result into place.
  CacheEntry produce(const std::string& stage, const std::string& key,
                     const std::string& description,
                     const std::function<void(const std::filesystem::path&)>& build) const;

  CacheEntry get_or_produce(const std::string& stage, const std::string& description,
                            const std::function<void(const std::filesystem::path&)>& build) const;

 private:
  std::filesystem::path root_;
};

}  // namespace texgram::pipeline
