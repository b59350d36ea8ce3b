// SPDX-License-Identifier: Apache-2.0
#include "dancecls/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "dancecls/binary_io.hpp"
#include "dancecls/errors.hpp"

namespace dancecls {

using nlohmann::json;

namespace {

// Floor-safe ceil(fraction * n): 0.7 * 20 must give 14, not 15.
std::size_t ceil_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

std::vector<std::vector<std::size_t>> indices_by_class(const DatasetManifest& m) {
  std::vector<std::vector<std::size_t>> by_class(m.num_classes());
  for (std::size_t i = 0; i < m.entries.size(); ++i) by_class[m.entries[i].label].push_back(i);
  for (std::size_t c = 0; c < by_class.size(); ++c)
    if (by_class[c].empty())
      throw ValueError("class '" + m.class_names[c] + "' has no entries");
  return by_class;
}

// Chooses `take(n)` entries per class at random; returns (chosen, rest) in input order.
template <typename TakeFn>
std::pair<DatasetManifest, DatasetManifest> stratified(const DatasetManifest& m,
                                                       std::uint64_t seed, TakeFn take) {
  validate(m);
  const auto by_class = indices_by_class(m);
  std::vector<char> chosen(m.entries.size(), 0);
  std::mt19937_64 rng(seed);
  for (auto members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t k = take(members.size());
    for (std::size_t i = 0; i < k; ++i) chosen[members[i]] = 1;
  }
  DatasetManifest first{m.class_names, {}, m.base_dir};
  DatasetManifest second{m.class_names, {}, m.base_dir};
  for (std::size_t i = 0; i < m.entries.size(); ++i)
    (chosen[i] ? first : second).entries.push_back(m.entries[i]);
  return {std::move(first), std::move(second)};
}

}  // namespace

std::filesystem::path DatasetManifest::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

void validate(const DatasetManifest& manifest) {
  if (manifest.class_names.empty()) throw ValueError("manifest lists no classes");
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    if (e.label < 0 || static_cast<std::size_t>(e.label) >= manifest.num_classes())
      throw ValueError("entry '" + e.clip_id + "' has label " + std::to_string(e.label) +
                       " outside [0, " + std::to_string(manifest.num_classes()) + ")");
    if (!ids.insert(e.clip_id).second)
      throw ValueError("duplicate clip id '" + e.clip_id + "'");
    if (e.skeleton.empty() && e.features.empty())
      throw ValueError("entry '" + e.clip_id + "' references no data files");
    std::set<std::string> paths;
    if (!e.skeleton.empty()) paths.insert(e.skeleton);
    for (const auto& [name, path] : e.features)
      if (!paths.insert(path).second)
        throw ValueError("entry '" + e.clip_id + "' references '" + path + "' twice");
  }
}

DatasetManifest parse_manifest(std::string_view json_text, std::filesystem::path base_dir) {
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  try {
    const auto doc = json::parse(json_text);
    m.class_names = doc.at("class_names").get<std::vector<std::string>>();
    for (const auto& item : doc.at("entries")) {
      ManifestEntry e;
      e.label = item.at("label").get<int>();
      e.skeleton = item.value("skeleton", std::string{});
      if (item.contains("features"))
        e.features = item.at("features").get<std::map<std::string, std::string>>();
      if (item.contains("clip_id")) {
        e.clip_id = item.at("clip_id").get<std::string>();
      } else if (!e.skeleton.empty()) {
        e.clip_id = std::filesystem::path(e.skeleton).stem().string();
      } else {
        e.clip_id = "clip" + std::to_string(m.entries.size());
      }
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("manifest: ") + ex.what());
  }
  validate(m);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest(as_text(bytes), path.parent_path());
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  json doc;
  doc["class_names"] = manifest.class_names;
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    json item;
    item["clip_id"] = e.clip_id;
    item["label"] = e.label;
    if (!e.skeleton.empty()) item["skeleton"] = e.skeleton;
    if (!e.features.empty()) item["features"] = e.features;
    doc["entries"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_text_file(path, serialize_manifest(manifest));
}

std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& manifest,
                                                          double train_fraction,
                                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValueError("train fraction must lie in (0, 1)");
  return stratified(manifest, seed, [&](std::size_t n) { return ceil_count(train_fraction, n); });
}

ValidationSplit carve_validation(const DatasetManifest& train, double fraction,
                                 std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw ValueError("validation fraction must lie in [0, 1)");
  auto [validation, fit] = stratified(train, seed, [&](std::size_t n) {
    return std::min(ceil_count(fraction, n), n - 1);
  });
  const bool early = !validation.entries.empty();
  return {std::move(fit), std::move(validation), early};
}

}  // namespace dancecls
