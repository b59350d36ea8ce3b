// SPDX-License-Identifier: Apache-2.0
#include "dancecls/feature_fusion.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

#include "dancecls/errors.hpp"
#include "dancecls/pose_signature.hpp"

namespace dancecls {

namespace {

constexpr std::string_view kMagic = "NRFT";
constexpr std::uint32_t kStreamVersion = 1;
constexpr std::uint32_t kChunkVersion = 2;

void check_finite(const FeatureMatrix& m, const std::string& name) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (!std::isfinite(m(r, c)))
        throw ValueError("stream '" + name + "': non-finite value at row " + std::to_string(r) +
                         ", column " + std::to_string(c));
}

void write_matrix(ByteWriter& w, const FeatureMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f32(m(r, c));
}

FeatureMatrix read_matrix(ByteReader& r, std::uint32_t rows, std::uint32_t dim) {
  if (static_cast<std::uint64_t>(rows) * dim * 4 > r.remaining())
    throw LoadError("feature payload truncated");
  FeatureMatrix m(rows, dim);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < dim; ++j) m(i, j) = r.f32();
  return m;
}

bool has_magic(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic.data(), 4) == 0;
}

FeatureMatrix parse_text_rows(std::string_view text, const std::string& name) {
  std::vector<std::vector<float>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    std::vector<float> row;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size() || line[i] == '#') break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      float v = 0;
      const char* first = line.data() + i;
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, line.data() + j, v);
      if (ec != std::errc() || ptr != line.data() + j)
        throw ParseError("stream '" + name + "': malformed number", line_no);
      if (!std::isfinite(v))
        throw ValueError("stream '" + name + "': non-finite value on line " +
                         std::to_string(line_no));
      row.push_back(v);
      i = j;
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw SchemaError("stream '" + name + "': line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " values, expected " +
                        std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError("stream '" + name + "' has no rows");
  FeatureMatrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace

std::size_t layout_dim(const StreamLayout& layout) {
  std::size_t d = 0;
  for (const auto& s : layout) d += s.dim;
  return d;
}

std::vector<std::size_t> layout_offsets(const StreamLayout& layout) {
  std::vector<std::size_t> offsets;
  std::size_t at = 0;
  for (const auto& s : layout) {
    offsets.push_back(at);
    at += s.dim;
  }
  return offsets;
}

std::uint64_t layout_hash(const StreamLayout& layout) {
  std::string key;
  for (const auto& s : layout) key += s.name + ":" + std::to_string(s.dim) + ";";
  return fnv1a64(key);
}

std::string describe_layout(const StreamLayout& layout) {
  std::string out;
  for (const auto& s : layout) {
    if (!out.empty()) out += "+";
    out += s.name + "(" + std::to_string(s.dim) + ")";
  }
  return out;
}

FeatureStream load_feature_stream(std::span<const std::uint8_t> bytes, std::string name) {
  FeatureStream stream{std::move(name), {}};
  if (!has_magic(bytes)) {
    stream.rows = parse_text_rows(as_text(bytes), stream.name);
    return stream;
  }
  ByteReader r(bytes);
  r.bytes(4);
  const auto version = r.u32();
  if (version != kStreamVersion)
    throw LoadError("stream '" + stream.name + "': unsupported feature file version " +
                    std::to_string(version));
  const auto rows = r.u32();
  const auto dim = r.u32();
  if (rows == 0 || dim == 0) throw SchemaError("stream '" + stream.name + "' is empty");
  stream.rows = read_matrix(r, rows, dim);
  if (r.remaining() != 0)
    throw SchemaError("stream '" + stream.name + "': trailing bytes after payload");
  check_finite(stream.rows, stream.name);
  return stream;
}

FeatureStream load_feature_file(const std::filesystem::path& path, std::string name) {
  return load_feature_stream(read_file(path), std::move(name));
}

Bytes encode_feature_stream(const FeatureStream& stream) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kStreamVersion);
  w.u32(static_cast<std::uint32_t>(stream.rows.rows()));
  w.u32(static_cast<std::uint32_t>(stream.rows.cols()));
  write_matrix(w, stream.rows);
  return w.take();
}

FeatureMatrix reshape_segment_features(const FeatureMatrix& segments,
                                       std::size_t frames_per_segment, std::size_t frame_dim) {
  const auto expected = static_cast<Eigen::Index>(frames_per_segment * frame_dim);
  if (segments.cols() != expected)
    throw SchemaError("segment vectors have " + std::to_string(segments.cols()) +
                      " values, expected " + std::to_string(expected));
  // Row-major storage makes this a pure reinterpretation of the buffer.
  FeatureMatrix out(segments.rows() * static_cast<Eigen::Index>(frames_per_segment),
                    static_cast<Eigen::Index>(frame_dim));
  std::copy(segments.data(), segments.data() + segments.size(), out.data());
  return out;
}

FeatureStream pose_stream(const SkeletonSequence& seq, std::size_t length) {
  const auto indices = sample_frames(seq, length);
  return {"pose", signature_sequence(seq, indices).cast<float>()};
}

FeatureChunk fuse(std::span<const FeatureStream> streams, std::size_t length) {
  if (streams.empty()) throw ValueError("fuse needs at least one stream");
  FeatureChunk chunk;
  for (const auto& s : streams) {
    if (s.length() == 0 || s.dim() == 0)
      throw SchemaError("stream '" + s.name + "' is empty");
    chunk.layout.push_back({s.name, s.dim()});
  }
  chunk.matrix.resize(static_cast<Eigen::Index>(length),
                      static_cast<Eigen::Index>(layout_dim(chunk.layout)));
  Eigen::Index col = 0;
  for (const auto& s : streams) {
    const auto idx = sample_indices(s.length(), length);
    for (std::size_t t = 0; t < length; ++t)
      chunk.matrix.row(static_cast<Eigen::Index>(t)).segment(col, s.rows.cols()) =
          s.rows.row(static_cast<Eigen::Index>(idx[t]));
    col += s.rows.cols();
  }
  return chunk;
}

Bytes encode_chunk(const FeatureChunk& chunk) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kChunkVersion);
  w.u32(static_cast<std::uint32_t>(chunk.matrix.rows()));
  w.u32(static_cast<std::uint32_t>(chunk.matrix.cols()));
  w.u32(static_cast<std::uint32_t>(chunk.layout.size()));
  for (const auto& s : chunk.layout) {
    w.str(s.name);
    w.u32(static_cast<std::uint32_t>(s.dim));
  }
  w.str(chunk.clip_id);
  w.i32(chunk.label ? *chunk.label : -1);
  write_matrix(w, chunk.matrix);
  return w.take();
}

FeatureChunk decode_chunk(std::span<const std::uint8_t> bytes) {
  if (!has_magic(bytes)) throw LoadError("not a chunk cache file (bad magic)");
  ByteReader r(bytes);
  r.bytes(4);
  const auto version = r.u32();
  if (version != kChunkVersion)
    throw LoadError("unsupported chunk cache version " + std::to_string(version));
  const auto rows = r.u32();
  const auto dim = r.u32();
  FeatureChunk chunk;
  const auto n_streams = r.u32();
  for (std::uint32_t i = 0; i < n_streams; ++i) {
    StreamSlot slot;
    slot.name = r.str();
    slot.dim = r.u32();
    chunk.layout.push_back(std::move(slot));
  }
  if (layout_dim(chunk.layout) != dim) throw LoadError("chunk layout does not cover its width");
  chunk.clip_id = r.str();
  const auto label = r.i32();
  if (label >= 0) chunk.label = label;
  chunk.matrix = read_matrix(r, rows, dim);
  if (r.remaining() != 0) throw LoadError("trailing bytes in chunk cache");
  return chunk;
}

}  // namespace dancecls
