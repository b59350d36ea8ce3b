// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dancecls {

struct ManifestEntry {
  std::string clip_id;
  /// Skeleton text file; may be empty when the clip only has external streams.
  std::string skeleton;
  int label = 0;
  /// External per-frame feature files keyed by stream name ("inception", ...).
  std::map<std::string, std::string> features;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Labeled clip list. Relative paths resolve against base_dir.
struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  std::size_t num_classes() const { return class_names.size(); }
};

/// Labels in range, clip ids unique, paths distinct within each entry.
void validate(const DatasetManifest& manifest);

/// JSON manifest:
///   { "class_names": [...],
///     "entries": [ { "clip_id": "...", "skeleton": "a.skel", "label": 0,
///                    "features": { "inception": "a.inc.nrft" } } ] }
DatasetManifest parse_manifest(std::string_view json_text, std::filesystem::path base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Per-class stratified split. Each class with n entries puts ceil(fraction * n)
/// into the first part; order inside each part follows the input order.
std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double train_fraction,
                                                          std::uint64_t seed);

struct ValidationSplit {
  DatasetManifest fit;
  DatasetManifest validation;
  bool early_stopping = true;
};

/// Holds out ceil(fraction * n) entries per class for validation while keeping at
/// least one entry per class for fitting. fraction == 0 disables early stopping.
ValidationSplit carve_validation(const DatasetManifest& train, double fraction,
                                 std::uint64_t seed);

}  // namespace dancecls
