// SPDX-License-Identifier: Apache-2.0
#include "dancecls/skeleton.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dancecls/binary_io.hpp"
#include "dancecls/errors.hpp"

namespace dancecls {

namespace {

constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "foot_right",      "knee_right", "hip_right",  "hip_left",      "knee_left",    "foot_left",
    "hip_center",      "spine",      "shoulder_center", "head",     "hand_right",   "elbow_right",
    "shoulder_right",  "shoulder_left", "elbow_left", "hand_left",
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Applies a "# key: value" header line; unknown keys are comments.
void apply_header(std::string_view body, SkeletonSequence& seq, std::size_t line_no) {
  const auto colon = body.find(':');
  if (colon == std::string_view::npos) return;
  const auto key = trim(body.substr(0, colon));
  const auto value = trim(body.substr(colon + 1));
  if (key == "clip_id") {
    seq.clip_id = std::string(value);
  } else if (key == "fps") {
    double fps = 0;
    if (!parse_number(value, fps)) throw ParseError("bad fps header", line_no);
    seq.fps = fps;
  } else if (key == "label") {
    int label = 0;
    if (!parse_number(value, label)) throw ParseError("bad label header", line_no);
    seq.label = label;
  }
}

}  // namespace

std::string_view joint_name(AnchorJoint joint) { return kJointNames.at(joint_index(joint) - 1); }

AnchorJoint joint_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kJointNames.size(); ++i)
    if (kJointNames[i] == name) return static_cast<AnchorJoint>(i + 1);
  throw ValueError("unknown anchor joint '" + std::string(name) + "'");
}

AnchorJoint joint_from_index(int index) {
  if (index < 1 || index > static_cast<int>(kNumJoints))
    throw ValueError("anchor joint index out of range: " + std::to_string(index));
  return static_cast<AnchorJoint>(index);
}

void validate(const SkeletonSequence& seq) {
  if (seq.frames.empty()) throw ValueError("sequence '" + seq.clip_id + "' has no frames");
  if (!(seq.fps > 0.0) || !std::isfinite(seq.fps))
    throw ValueError("sequence '" + seq.clip_id + "' has non-positive fps");
  if (seq.label && *seq.label < 0) throw ValueError("negative class label");
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const auto& frame = seq.frames[f];
    if (f > 0 && frame.frame_index <= seq.frames[f - 1].frame_index)
      throw ValueError("frame indices not strictly increasing at frame " +
                       std::to_string(frame.frame_index));
    for (const auto& p : frame.positions)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw ValueError("non-finite coordinate in frame " + std::to_string(frame.frame_index));
  }
}

SkeletonSequence parse_skeleton(std::string_view text, std::string default_clip_id) {
  SkeletonSequence seq;
  seq.clip_id = std::move(default_clip_id);

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    const auto line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;

    if (line.empty()) {
      if (nl == std::string_view::npos) break;
      continue;
    }
    if (line.front() == '#') {
      apply_header(line.substr(1), seq, line_no);
      continue;
    }

    const auto tokens = split_ws(line);
    SkeletonFrame frame;
    if (!parse_number(tokens[0], frame.frame_index))
      throw ParseError("frame index '" + std::string(tokens[0]) + "' is not an integer", line_no);

    const std::size_t values = tokens.size() - 1;
    const std::size_t with_confidence = 3 * kNumJoints;
    if (values != 2 * kNumJoints && values != with_confidence) {
      if (values % 2 != 0)
        throw ParseError("odd number of coordinate values (" + std::to_string(values) + ")",
                         line_no);
      throw SchemaError("frame " + std::to_string(frame.frame_index) + " (line " +
                        std::to_string(line_no) + ") has " + std::to_string(values / 2) +
                        " joints, expected " + std::to_string(kNumJoints));
    }

    for (std::size_t j = 0; j < kNumJoints; ++j) {
      auto& p = frame.positions[j];
      if (!parse_number(tokens[1 + 2 * j], p.x) || !parse_number(tokens[2 + 2 * j], p.y))
        throw ParseError("malformed coordinate for joint " + std::to_string(j + 1), line_no);
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw ValueError("line " + std::to_string(line_no) + ": non-finite coordinate for joint " +
                         std::to_string(j + 1) + " in frame " +
                         std::to_string(frame.frame_index));
    }
    for (std::size_t k = 1 + 2 * kNumJoints; k < tokens.size(); ++k) {
      double confidence = 0;
      if (!parse_number(tokens[k], confidence))
        throw ParseError("malformed confidence value", line_no);
    }

    if (!seq.frames.empty() && frame.frame_index <= seq.frames.back().frame_index)
      throw ParseError("frame index " + std::to_string(frame.frame_index) +
                           " does not increase",
                       line_no);
    seq.frames.push_back(frame);
    if (nl == std::string_view::npos) break;
  }

  validate(seq);
  return seq;
}

SkeletonSequence load_skeleton_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_skeleton(as_text(bytes), path.stem().string());
}

std::string serialize_skeleton(const SkeletonSequence& seq) {
  std::ostringstream out;
  out << "# clip_id: " << seq.clip_id << '\n';
  out << "# fps: " << format_double(seq.fps) << '\n';
  if (seq.label) out << "# label: " << *seq.label << '\n';
  for (const auto& frame : seq.frames) {
    out << frame.frame_index;
    for (const auto& p : frame.positions) out << ' ' << format_double(p.x) << ' ' << format_double(p.y);
    out << '\n';
  }
  return out.str();
}

std::vector<std::size_t> sample_indices(std::size_t frame_count, std::size_t count) {
  if (frame_count == 0) throw ValueError("cannot sample from an empty sequence");
  if (count == 0) throw ValueError("sample count must be positive");
  std::vector<std::size_t> idx(count, 0);
  if (count == 1) return idx;
  // i * (T - 1) / (count - 1), rounded half up in exact integer arithmetic.
  const std::uint64_t span = frame_count - 1;
  const std::uint64_t denom = count - 1;
  for (std::size_t i = 0; i < count; ++i)
    idx[i] = static_cast<std::size_t>((2 * i * span + denom) / (2 * denom));
  return idx;
}

std::vector<std::size_t> sample_frames(const SkeletonSequence& seq, std::size_t count) {
  return sample_indices(seq.frames.size(), count);
}

}  // namespace dancecls
