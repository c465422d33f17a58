#include "texgram/pipeline/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <opencv2/imgcodecs.hpp>

#include "texgram/error.hpp"
#include "texgram/hashing.hpp"

namespace fs = std::filesystem;

namespace texgram::pipeline {

namespace {

std::string lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return text;
}

bool hidden(const fs::path& path) {
  const std::string name = path.filename().string();
  return !name.empty() && name.front() == '.';
}

}  // namespace

bool is_image_file(const fs::path& path) {
  static const std::vector<std::string> extensions = {".png", ".jpg", ".jpeg", ".bmp", ".tif",
                                                      ".tiff", ".ppm", ".pgm", ".webp"};
  const std::string ext = lower(path.extension().string());
  return std::find(extensions.begin(), extensions.end(), ext) != extensions.end();
}

std::vector<int> DatasetIndex::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const DatasetItem& item : items) out.push_back(item.class_id);
  return out;
}

std::vector<std::string> DatasetIndex::item_ids() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const DatasetItem& item : items) out.push_back(item.item_id);
  return out;
}

std::string DatasetIndex::fingerprint() const {
  Sha256 hash;
  for (const DatasetItem& item : items) {
    hash.update(item.item_id)
        .update("\n")
        .update(fs::relative(item.path, root).generic_string())
        .update("\n")
        .update(class_names[static_cast<std::size_t>(item.class_id)])
        .update("\n")
        .update(sha256_file(item.path))
        .update("\n");
  }
  return hash.hex_digest();
}

DatasetIndex ingest_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw DataError("dataset root is not a directory: " + root.string());
  }
  std::vector<fs::path> class_dirs;
  for (const fs::directory_entry& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && !hidden(entry.path())) class_dirs.push_back(entry.path());
  }
  if (class_dirs.empty()) throw DataError("dataset root has no class directories: " + root.string());
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  DatasetIndex index;
  index.root = root;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    const std::string class_name = class_dirs[c].filename().string();
    std::vector<fs::path> files;
    for (const fs::directory_entry& entry : fs::directory_iterator(class_dirs[c])) {
      if (entry.is_regular_file() && !hidden(entry.path()) && is_image_file(entry.path())) {
        files.push_back(entry.path());
      }
    }
    if (files.empty()) throw DataError("empty class directory '" + class_name + "'");
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

    std::map<std::string, fs::path> stems;
    for (const fs::path& file : files) {
      const std::string stem = lower(file.stem().string());
      if (const auto [it, inserted] = stems.emplace(stem, file); !inserted) {
        throw DataError("duplicate file name in class '" + class_name + "': " +
                        it->second.filename().string() + " and " + file.filename().string());
      }
      if (!std::ifstream(file, std::ios::binary) || !cv::haveImageReader(file.string())) {
        throw DataError("unreadable image: " + file.string());
      }
      index.items.push_back({file, static_cast<int>(c), class_name + "/" + file.stem().string()});
    }
    index.class_names.push_back(class_name);
    index.class_counts.push_back(files.size());
  }
  return index;
}

}  // namespace texgram::pipeline
