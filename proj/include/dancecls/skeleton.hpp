// SPDX-License-Identifier: Apache-2.0
//
// Skeleton-joint sequences: the 16 anchor joints, per-frame positions and
// the line-delimited text format produced by upstream pose estimation.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dancecls {

inline constexpr std::size_t kNumJoints = 16;

/// Anchor joints, numbered 1..16 in the canonical order.
enum class AnchorJoint : int {
  foot_right = 1,
  knee_right,
  hip_right,
  hip_left,
  knee_left,
  foot_left,
  hip_center,
  spine,
  shoulder_center,
  head,
  hand_right,
  elbow_right,
  shoulder_right,
  shoulder_left,
  elbow_left,
  hand_left,
};

std::string_view joint_name(AnchorJoint joint);
/// Throws ValueError for an unknown name.
AnchorJoint joint_from_name(std::string_view name);
/// Throws ValueError unless 1 <= index <= 16.
AnchorJoint joint_from_index(int index);
constexpr int joint_index(AnchorJoint joint) { return static_cast<int>(joint); }

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Joint positions in pixels, image convention (y grows downward).
struct SkeletonFrame {
  std::array<Point2, kNumJoints> positions{};
  std::int64_t frame_index = 0;

  const Point2& at(AnchorJoint j) const { return positions[joint_index(j) - 1]; }
  Point2& at(AnchorJoint j) { return positions[joint_index(j) - 1]; }
  /// 1-based access matching the joint numbering.
  const Point2& joint(int index) const { return positions[index - 1]; }

  friend bool operator==(const SkeletonFrame&, const SkeletonFrame&) = default;
};

struct SkeletonSequence {
  std::string clip_id;
  std::vector<SkeletonFrame> frames;
  double fps = 25.0;
  std::optional<int> label;

  double duration_seconds() const { return static_cast<double>(frames.size()) / fps; }

  friend bool operator==(const SkeletonSequence&, const SkeletonSequence&) = default;
};

/// Checks frame count, finiteness, strictly increasing frame indices, fps > 0.
void validate(const SkeletonSequence& seq);

/// Parses the skeleton text format:
///
///   # clip_id: <id>      (optional header lines)
///   # fps: <real>
///   # label: <int>
///   <frame_index> x1 y1 ... x16 y16 [c1 ... c16]
///
/// Trailing per-joint confidences are accepted and dropped. Blank lines and
/// other '#' lines are ignored.
SkeletonSequence parse_skeleton(std::string_view text, std::string default_clip_id = {});
SkeletonSequence load_skeleton_file(const std::filesystem::path& path);

/// Inverse of parse_skeleton; coordinates use shortest round-trip formatting.
std::string serialize_skeleton(const SkeletonSequence& seq);

/// round(linspace(0, frame_count - 1, count)) with ties rounded up.
/// Repeats indices when frame_count < count.
std::vector<std::size_t> sample_indices(std::size_t frame_count, std::size_t count);
std::vector<std::size_t> sample_frames(const SkeletonSequence& seq, std::size_t count);

}  // namespace dancecls
