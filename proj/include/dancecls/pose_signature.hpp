// SPDX-License-Identifier: Apache-2.0
//
// 75-D per-frame pose signature:
//
//   [ 0, 15)  distances from hip_center to the other 15 joints / scale
//   [15, 23)  segment angles for the 8 ordered joint pairs
//   [23, 27)  leg and hand symmetry distances / scale
//   [27, 59)  per-joint flow (dx, dy) from the previous sampled frame / scale
//   [59, 75)  per-joint flow direction
//
// Angles are atan2 of the a->b segment in image coordinates (y down), in
// (-pi, pi]. The scale is the hip_center -> shoulder_center distance, falling
// back to the joint bounding-box diagonal for a collapsed torso.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include <Eigen/Core>

#include "dancecls/skeleton.hpp"

namespace dancecls {

struct PoseSignature {
  static constexpr std::size_t kRadial = 15;
  static constexpr std::size_t kAngles = 8;
  static constexpr std::size_t kSymmetry = 4;
  static constexpr std::size_t kFlowVectors = 2 * kNumJoints;
  static constexpr std::size_t kFlowDirections = kNumJoints;
  static constexpr std::size_t kDim = kRadial + kAngles + kSymmetry + kFlowVectors + kFlowDirections;

  std::array<double, kRadial> radial_distances{};
  std::array<double, kAngles> pair_angles{};
  std::array<double, kSymmetry> symmetry_distances{};
  std::array<double, kFlowVectors> flow_vectors{};
  std::array<double, kFlowDirections> flow_directions{};

  /// Concatenation in the canonical segment order.
  std::array<double, kDim> flatten() const;
};

static_assert(PoseSignature::kDim == 75);

/// Offsets of each segment inside the flattened vector.
namespace signature_layout {
inline constexpr std::size_t kRadialBegin = 0;
inline constexpr std::size_t kAnglesBegin = kRadialBegin + PoseSignature::kRadial;
inline constexpr std::size_t kSymmetryBegin = kAnglesBegin + PoseSignature::kAngles;
inline constexpr std::size_t kFlowVectorsBegin = kSymmetryBegin + PoseSignature::kSymmetry;
inline constexpr std::size_t kFlowDirectionsBegin = kFlowVectorsBegin + PoseSignature::kFlowVectors;
}  // namespace signature_layout

/// Ordered joint pairs whose segment angle enters the signature.
inline constexpr std::array<std::pair<int, int>, 8> kAnglePairs = {
    {{1, 3}, {2, 7}, {4, 6}, {5, 7}, {11, 13}, {9, 12}, {9, 15}, {14, 16}}};
/// Leg pairs then hand pairs.
inline constexpr std::array<std::pair<int, int>, 4> kSymmetryPairs = {
    {{1, 6}, {2, 5}, {11, 16}, {12, 15}}};
inline constexpr int kReferenceJoint = 7;

class NormalizationScale {
 public:
  /// Throws ValueError unless scale > 0 and finite.
  explicit NormalizationScale(double scale);
  double value() const { return scale_; }

 private:
  double scale_;
};

/// Wraps any finite angle into (-pi, pi].
double wrap_angle(double radians);

/// Throws DegeneratePoseError when every joint coincides.
NormalizationScale reference_scale(const SkeletonFrame& frame);

std::array<double, PoseSignature::kRadial> radial_distances(const SkeletonFrame& frame,
                                                             NormalizationScale scale);
std::array<double, PoseSignature::kAngles> pair_angles(const SkeletonFrame& frame);
std::array<double, PoseSignature::kSymmetry> symmetry_distances(const SkeletonFrame& frame,
                                                                 NormalizationScale scale);

struct JointFlow {
  std::array<double, PoseSignature::kFlowVectors> vectors{};
  std::array<double, PoseSignature::kFlowDirections> directions{};
};

/// Zero flow when prev is absent (first sampled frame).
JointFlow joint_flow(const SkeletonFrame* prev, const SkeletonFrame& curr,
                     NormalizationScale scale);

PoseSignature pose_signature(const SkeletonFrame* prev, const SkeletonFrame& curr);

/// Row t is the signature of frame indices[t], with flow taken against the
/// previously sampled frame indices[t - 1].
Eigen::MatrixXd signature_sequence(const SkeletonSequence& seq,
                                   std::span<const std::size_t> indices);

}  // namespace dancecls
