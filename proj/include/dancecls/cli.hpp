// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dancecls/feature_fusion.hpp"
#include "dancecls/manifest.hpp"

namespace dancecls {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 2,
  kExitPartialFailure = 3,
  kExitTrainingAbort = 4,
};

/// Entry point shared by the `dancecls` binary and the integration tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ChunkOptions {
  std::vector<std::string> streams{"inception", "kinetics", "pose"};
  /// Streams whose files may hold 16-frame segment vectors (16 * 128 wide).
  std::vector<std::string> segment_streams{"kinetics"};
  std::size_t sample_len = kDefaultSequenceLength;
};

/// Builds the fused chunk of one manifest entry. The "pose" stream comes from
/// a "pose" feature file when listed, otherwise from the skeleton file.
FeatureChunk build_chunk(const DatasetManifest& manifest, const ManifestEntry& entry,
                         const ChunkOptions& options);
std::vector<FeatureChunk> build_chunks(const DatasetManifest& manifest,
                                       const ChunkOptions& options);

}  // namespace dancecls
