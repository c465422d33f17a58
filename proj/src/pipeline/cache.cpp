#include "texgram/pipeline/cache.hpp"

#include <algorithm>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "texgram/binary_io.hpp"
#include "texgram/error.hpp"
#include "texgram/hashing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace texgram::pipeline {

namespace {

constexpr const char* kManifest = "manifest.json";

std::string files_digest(const json& files) { return sha256_hex(files.dump()); }

}  // namespace

fs::path CacheEntry::file(const std::string& relative) const {
  const fs::path p = dir / relative;
  if (!fs::exists(p)) {
    throw DataError("missing upstream artifact " + relative + " in " + stage + " cache entry");
  }
  return p;
}

StageCache::StageCache(fs::path root) : root_(std::move(root)) {}

std::string StageCache::make_key(const std::string& stage, const std::string& description) {
  Sha256 hash;
  hash.update(stage).update("\n").update(std::to_string(kCacheFormatVersion)).update("\n").update(description);
  return hash.hex_digest();
}

std::optional<CacheEntry> StageCache::lookup(const std::string& stage, const std::string& key) const {
  const fs::path dir = root_ / stage / key;
  if (!fs::exists(dir)) return std::nullopt;

  const auto stale = [&](const std::string& why) -> std::optional<CacheEntry> {
    spdlog::warn("rejecting stale {} cache entry {}: {}", stage, key.substr(0, 12), why);
    std::error_code ec;
    fs::remove_all(dir, ec);
    return std::nullopt;
  };

  json manifest;
  try {
    manifest = json::parse(io::read_text(dir / kManifest));
  } catch (const std::exception&) {
    return stale("unreadable manifest");
  }
  try {
    if (manifest.at("cache_format").get<int>() != kCacheFormatVersion) return stale("format version mismatch");
    if (manifest.at("stage").get<std::string>() != stage) return stale("stage mismatch");
    if (manifest.at("key").get<std::string>() != key) return stale("key mismatch");
    const json& files = manifest.at("files");
    for (const json& f : files) {
      const fs::path p = dir / f.at("path").get<std::string>();
      std::error_code ec;
      if (!fs::is_regular_file(p, ec)) return stale("missing " + f.at("path").get<std::string>());
      if (fs::file_size(p) != f.at("size").get<std::uintmax_t>() ||
          sha256_file(p) != f.at("sha256").get<std::string>()) {
        return stale("modified " + f.at("path").get<std::string>());
      }
    }
    return CacheEntry{stage, key, dir, files_digest(files)};
  } catch (const json::exception&) {
    return stale("malformed manifest");
  }
}

CacheEntry StageCache::produce(const std::string& stage, const std::string& key,
                               const std::string& description,
                               const std::function<void(const fs::path&)>& build) const {
  const fs::path dir = root_ / stage / key;
  const fs::path scratch = root_ / stage / (key + ".partial");
  std::error_code ec;
  fs::remove_all(scratch, ec);
  fs::create_directories(scratch);
  try {
    build(scratch);
  } catch (...) {
    fs::remove_all(scratch, ec);
    throw;
  }

  std::vector<fs::path> written;
  for (const fs::directory_entry& e : fs::recursive_directory_iterator(scratch)) {
    if (e.is_regular_file()) written.push_back(fs::relative(e.path(), scratch));
  }
  std::sort(written.begin(), written.end());
  json files = json::array();
  for (const fs::path& rel : written) {
    const fs::path p = scratch / rel;
    files.push_back({{"path", rel.generic_string()}, {"size", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  json description_json;
  try {
    description_json = json::parse(description);
  } catch (const json::exception&) {
    description_json = description;
  }
  const json manifest = {{"cache_format", kCacheFormatVersion},
                         {"stage", stage},
                         {"key", key},
                         {"inputs", description_json},
                         {"files", files}};
  io::write_text(scratch / kManifest, manifest.dump(2) + "\n");

  fs::remove_all(dir, ec);
  fs::rename(scratch, dir);
  return CacheEntry{stage, key, dir, files_digest(files)};
}

CacheEntry StageCache::get_or_produce(const std::string& stage, const std::string& description,
                                      const std::function<void(const fs::path&)>& build) const {
  const std::string key = make_key(stage, description);
  if (auto hit = lookup(stage, key)) {
    spdlog::debug("{}: cache hit {}", stage, key.substr(0, 12));
    return *hit;
  }
  spdlog::info("{}: computing {}", stage, key.substr(0, 12));
  return produce(stage, key, description, build);
}

}  // namespace texgram::pipeline
