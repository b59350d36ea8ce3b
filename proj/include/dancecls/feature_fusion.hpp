// SPDX-License-Identifier: Apache-2.0
//
// Per-frame feature streams and the fixed-length chunks fed to the classifier.
//
// Feature file (little-endian):
//   "NRFT" | u32 version=1 | u32 rows | u32 dim | rows*dim f32, row-major
// A text variant with one whitespace-separated row per line is accepted on read.
//
// Chunk cache file:
//   "NRFT" | u32 version=2 | u32 rows | u32 dim
//   | u32 stream_count | { u32 len, name bytes, u32 dim } * stream_count
//   | u32 len, clip id bytes | i32 label (-1 = none) | rows*dim f32
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dancecls/binary_io.hpp"
#include "dancecls/skeleton.hpp"

namespace dancecls {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kDefaultSequenceLength = 48;
inline constexpr std::size_t kInceptionDim = 2048;
inline constexpr std::size_t kKineticsDim = 128;
inline constexpr std::size_t kKineticsSegmentFrames = 16;

struct FeatureStream {
  std::string name;
  FeatureMatrix rows;  // T x dim

  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
  std::size_t length() const { return static_cast<std::size_t>(rows.rows()); }
};

struct StreamSlot {
  std::string name;
  std::size_t dim = 0;

  friend bool operator==(const StreamSlot&, const StreamSlot&) = default;
};

using StreamLayout = std::vector<StreamSlot>;

std::size_t layout_dim(const StreamLayout& layout);
/// Column offset of each slot; offsets partition [0, layout_dim).
std::vector<std::size_t> layout_offsets(const StreamLayout& layout);
/// Stable identifier of an ordered stream layout.
std::uint64_t layout_hash(const StreamLayout& layout);
/// "inception(2048)+pose(75)".
std::string describe_layout(const StreamLayout& layout);

struct FeatureChunk {
  std::string clip_id;
  std::optional<int> label;
  FeatureMatrix matrix;  // sequence_length x D
  StreamLayout layout;

  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
  std::size_t length() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Binary or text feature file. Throws SchemaError on ragged rows and
/// ValueError on non-finite entries.
FeatureStream load_feature_stream(std::span<const std::uint8_t> bytes, std::string name);
FeatureStream load_feature_file(const std::filesystem::path& path, std::string name);
Bytes encode_feature_stream(const FeatureStream& stream);

/// Splits each segment vector of frames_per_segment * frame_dim values into
/// frames_per_segment consecutive rows. Throws SchemaError on a width mismatch.
FeatureMatrix reshape_segment_features(const FeatureMatrix& segments,
                                       std::size_t frames_per_segment = kKineticsSegmentFrames,
                                       std::size_t frame_dim = kKineticsDim);

/// Pose-signature stream for one clip, sampled to `length` frames.
FeatureStream pose_stream(const SkeletonSequence& seq, std::size_t length = kDefaultSequenceLength);

/// Resamples every stream to `length` rows and concatenates them column-wise
/// in the given order. Throws ValueError for an empty stream list.
FeatureChunk fuse(std::span<const FeatureStream> streams,
                  std::size_t length = kDefaultSequenceLength);

Bytes encode_chunk(const FeatureChunk& chunk);
FeatureChunk decode_chunk(std::span<const std::uint8_t> bytes);

}  // namespace dancecls
