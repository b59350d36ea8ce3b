#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "dancecls/errors.hpp"
#include "dancecls/manifest.hpp"

using namespace dancecls;

namespace {

DatasetManifest make_manifest(std::vector<std::size_t> per_class) {
  DatasetManifest m;
  for (std::size_t c = 0; c < per_class.size(); ++c) m.class_names.push_back("class" + std::to_string(c));
  int k = 0;
  for (std::size_t c = 0; c < per_class.size(); ++c)
    for (std::size_t i = 0; i < per_class[c]; ++i, ++k) {
      ManifestEntry e;
      e.clip_id = "clip" + std::to_string(k);
      e.skeleton = "skel/" + e.clip_id + ".txt";
      e.label = static_cast<int>(c);
      m.entries.push_back(e);
    }
  return m;
}

std::map<int, std::size_t> class_counts(const DatasetManifest& m) {
  std::map<int, std::size_t> out;
  for (const auto& e : m.entries) ++out[e.label];
  return out;
}

std::vector<std::string> ids(const DatasetManifest& m) {
  std::vector<std::string> out;
  for (const auto& e : m.entries) out.push_back(e.clip_id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("manifest") {

TEST_CASE("parse and serialize round-trip") {
  const std::string text = R"({
    "class_names": ["a", "b"],
    "entries": [
      {"clip_id": "x", "skeleton": "x.txt", "label": 0, "features": {"inception": "x.inc"}},
      {"clip_id": "y", "skeleton": "y.txt", "label": 1}
    ]})";
  const auto m = parse_manifest(text, "/data");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].features.at("inception") == "x.inc");
  CHECK(m.resolve("x.txt") == std::filesystem::path("/data/x.txt"));
  CHECK(m.resolve("/abs/y.txt") == std::filesystem::path("/abs/y.txt"));
  const auto again = parse_manifest(serialize_manifest(m), "/data");
  CHECK(again.class_names == m.class_names);
  CHECK(again.entries == m.entries);
}

TEST_CASE("invalid manifests are rejected") {
  CHECK_THROWS_AS(parse_manifest("{not json"), ParseError);
  CHECK_THROWS(parse_manifest(R"({"class_names": ["a"], "entries": [{"clip_id": "x", "skeleton": "s", "label": 1}]})"));
  CHECK_THROWS(parse_manifest(
      R"({"class_names": ["a"], "entries": [{"clip_id": "x", "skeleton": "s", "label": 0, "features": {"pose": "s"}}]})"));
  CHECK_THROWS(parse_manifest(
      R"({"class_names": ["a"], "entries": [{"clip_id": "x", "skeleton": "s", "label": 0}, {"clip_id": "x", "skeleton": "t", "label": 0}]})"));
}

TEST_CASE("7:3 split of 10 entries per class") {
  const auto m = make_manifest({10, 10, 10, 10, 10, 10});
  const auto [train, test] = split_dataset(m, 0.7, 42);
  for (const auto& [c, n] : class_counts(train)) CHECK(n == 7);
  for (const auto& [c, n] : class_counts(test)) CHECK(n == 3);
}

TEST_CASE("single-entry class goes 1 train / 0 test") {
  const auto m = make_manifest({1, 4});
  const auto [train, test] = split_dataset(m, 0.7, 1);
  CHECK(class_counts(train)[0] == 1);
  CHECK(class_counts(test).count(0) == 0);
  CHECK(class_counts(train)[1] == 3);
  CHECK(class_counts(test)[1] == 1);
}

TEST_CASE("empty class is a value error") {
  CHECK_THROWS_AS(split_dataset(make_manifest({3, 0, 2}), 0.7, 0), ValueError);
  CHECK_THROWS_AS(split_dataset(make_manifest({3, 3}), 0.0, 0), ValueError);
  CHECK_THROWS_AS(split_dataset(make_manifest({3, 3}), 1.0, 0), ValueError);
}

TEST_CASE("split is deterministic, disjoint and complete") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::vector<std::size_t> sizes = {seed % 7 + 1, 5, 13, 2, 9, seed % 3 + 1};
    const auto m = make_manifest(sizes);
    for (double frac : {0.1, 0.5, 0.7, 0.9}) {
      const auto [train, test] = split_dataset(m, frac, seed);
      const auto [train2, test2] = split_dataset(m, frac, seed);
      CHECK(serialize_manifest(train) == serialize_manifest(train2));
      CHECK(serialize_manifest(test) == serialize_manifest(test2));

      auto all = ids(train);
      const auto t = ids(test);
      all.insert(all.end(), t.begin(), t.end());
      std::sort(all.begin(), all.end());
      CHECK(all == ids(m));
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());

      auto counts = class_counts(train);
      for (std::size_t c = 0; c < sizes.size(); ++c) {
        const auto expect = static_cast<std::size_t>(std::ceil(frac * sizes[c] - 1e-9));
        CHECK(counts[static_cast<int>(c)] == expect);
      }
    }
  }
}

TEST_CASE("different seeds shuffle differently") {
  const auto m = make_manifest({20, 20, 20, 20, 20, 20});
  CHECK(ids(split_dataset(m, 0.7, 1).first) != ids(split_dataset(m, 0.7, 2).first));
}

TEST_CASE("carve_validation 20 per class at 0.1 gives 18/2") {
  const auto m = make_manifest({20, 20, 20, 20, 20, 20});
  const auto v = carve_validation(m, 0.1, 9);
  CHECK(v.early_stopping);
  for (const auto& [c, n] : class_counts(v.fit)) CHECK(n == 18);
  for (const auto& [c, n] : class_counts(v.validation)) CHECK(n == 2);
  const auto v2 = carve_validation(m, 0.1, 9);
  CHECK(serialize_manifest(v.fit) == serialize_manifest(v2.fit));
  CHECK(serialize_manifest(v.validation) == serialize_manifest(v2.validation));
}

TEST_CASE("carve_validation at fraction 0 disables early stopping") {
  const auto m = make_manifest({4, 4});
  const auto v = carve_validation(m, 0.0, 3);
  CHECK_FALSE(v.early_stopping);
  CHECK(v.validation.entries.empty());
  CHECK(v.fit.entries.size() == 8);
  CHECK_THROWS_AS(carve_validation(m, 1.0, 3), ValueError);
  CHECK_THROWS_AS(carve_validation(make_manifest({4, 0}), 0.1, 3), ValueError);
}

}  // TEST_SUITE
