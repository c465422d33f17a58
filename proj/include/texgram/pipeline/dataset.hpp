#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace texgram::pipeline {

struct DatasetItem {
  std::filesystem::path path;
  int class_id = 0;
  std::string item_id;  // "<class>/<file stem>"
};

// Images ordered by class name, then file name. Class ids are dense in
// [0, class_names.size()).
struct DatasetIndex {
  std::filesystem::path root;
  std::vector<DatasetItem> items;
  std::vector<std::string> class_names;
  std::vector<std::size_t> class_counts;

  std::vector<int> labels() const;
  std::vector<std::string> item_ids() const;
  // SHA-256 over relative paths, classes and file contents.
  std::string fingerprint() const;
};

bool is_image_file(const std::filesystem::path& path);

// One subdirectory per class under `root`; hidden entries and files without
// an image extension are ignored. Throws DataError on a missing root, no
// classes, an empty class, an unreadable image, or two files in one class
// sharing a stem.
DatasetIndex ingest_dataset(const std::filesystem::path& root);

}  // namespace texgram::pipeline
