// SPDX-License-Identifier: Apache-2.0
#include "dancecls/pose_signature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dancecls/errors.hpp"

namespace dancecls {

namespace {

constexpr double kTorsoEpsilon = 1e-6;
constexpr double kStillEpsilon = 1e-9;

double distance(const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); }

double segment_angle(const Point2& a, const Point2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return wrap_angle(std::atan2(dy, dx));
}

}  // namespace

std::array<double, PoseSignature::kDim> PoseSignature::flatten() const {
  std::array<double, kDim> out{};
  auto it = std::copy(radial_distances.begin(), radial_distances.end(), out.begin());
  it = std::copy(pair_angles.begin(), pair_angles.end(), it);
  it = std::copy(symmetry_distances.begin(), symmetry_distances.end(), it);
  it = std::copy(flow_vectors.begin(), flow_vectors.end(), it);
  std::copy(flow_directions.begin(), flow_directions.end(), it);
  return out;
}

NormalizationScale::NormalizationScale(double scale) : scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ValueError("normalization scale must be positive, got " + std::to_string(scale));
}

double wrap_angle(double radians) {
  constexpr double pi = std::numbers::pi;
  if (radians > -pi && radians <= pi) return radians;
  double r = std::remainder(radians, 2.0 * pi);
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

NormalizationScale reference_scale(const SkeletonFrame& frame) {
  const double torso =
      distance(frame.at(AnchorJoint::hip_center), frame.at(AnchorJoint::shoulder_center));
  if (torso >= kTorsoEpsilon) return NormalizationScale(torso);

  double min_x = frame.positions[0].x, max_x = min_x;
  double min_y = frame.positions[0].y, max_y = min_y;
  for (const auto& p : frame.positions) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double diagonal = std::hypot(max_x - min_x, max_y - min_y);
  if (diagonal < kTorsoEpsilon)
    throw DegeneratePoseError("degenerate pose in frame " + std::to_string(frame.frame_index) +
                              ": all joints coincide");
  return NormalizationScale(diagonal);
}

std::array<double, PoseSignature::kRadial> radial_distances(const SkeletonFrame& frame,
                                                             NormalizationScale scale) {
  std::array<double, PoseSignature::kRadial> out{};
  const Point2& ref = frame.joint(kReferenceJoint);
  std::size_t k = 0;
  for (int j = 1; j <= static_cast<int>(kNumJoints); ++j) {
    if (j == kReferenceJoint) continue;
    out[k++] = distance(ref, frame.joint(j)) / scale.value();
  }
  return out;
}

std::array<double, PoseSignature::kAngles> pair_angles(const SkeletonFrame& frame) {
  std::array<double, PoseSignature::kAngles> out{};
  for (std::size_t k = 0; k < kAnglePairs.size(); ++k)
    out[k] = segment_angle(frame.joint(kAnglePairs[k].first), frame.joint(kAnglePairs[k].second));
  return out;
}

std::array<double, PoseSignature::kSymmetry> symmetry_distances(const SkeletonFrame& frame,
                                                                 NormalizationScale scale) {
  std::array<double, PoseSignature::kSymmetry> out{};
  for (std::size_t k = 0; k < kSymmetryPairs.size(); ++k)
    out[k] = distance(frame.joint(kSymmetryPairs[k].first), frame.joint(kSymmetryPairs[k].second)) /
             scale.value();
  return out;
}

JointFlow joint_flow(const SkeletonFrame* prev, const SkeletonFrame& curr,
                     NormalizationScale scale) {
  JointFlow flow;
  if (prev == nullptr) return flow;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const double dx = (curr.positions[j].x - prev->positions[j].x) / scale.value();
    const double dy = (curr.positions[j].y - prev->positions[j].y) / scale.value();
    flow.vectors[2 * j] = dx;
    flow.vectors[2 * j + 1] = dy;
    flow.directions[j] = std::hypot(dx, dy) < kStillEpsilon ? 0.0 : wrap_angle(std::atan2(dy, dx));
  }
  return flow;
}

PoseSignature pose_signature(const SkeletonFrame* prev, const SkeletonFrame& curr) {
  const auto scale = reference_scale(curr);
  PoseSignature sig;
  sig.radial_distances = radial_distances(curr, scale);
  sig.pair_angles = pair_angles(curr);
  sig.symmetry_distances = symmetry_distances(curr, scale);
  auto flow = joint_flow(prev, curr, scale);
  sig.flow_vectors = flow.vectors;
  sig.flow_directions = flow.directions;
  return sig;
}

Eigen::MatrixXd signature_sequence(const SkeletonSequence& seq,
                                   std::span<const std::size_t> indices) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()),
                      static_cast<Eigen::Index>(PoseSignature::kDim));
  const SkeletonFrame* prev = nullptr;
  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (indices[t] >= seq.frames.size())
      throw ContractError("sample index " + std::to_string(indices[t]) + " out of range for '" +
                          seq.clip_id + "'");
    const auto& curr = seq.frames[indices[t]];
    const auto row = pose_signature(prev, curr).flatten();
    for (std::size_t k = 0; k < row.size(); ++k)
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = row[k];
    prev = &curr;
  }
  return out;
}

}  // namespace dancecls
