// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include <json.hpp>

#include "dancecls/errors.hpp"
#include "dancecls/sequence_model.hpp"

namespace dancecls {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "NRCK";
constexpr std::uint32_t kVersion = 1;

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double null_or_double(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json metadata_of(const Checkpoint& ck) {
  const auto& m = ck.model;
  const auto& c = m.config();
  json meta;
  meta["config"] = {
      {"input_dim", c.input_dim},
      {"lstm_hidden", c.lstm_hidden},
      {"dense1", c.dense1()},
      {"dense2", c.dense2()},
      {"num_classes", c.num_classes},
      {"activation", to_string(c.activation)},
      {"sequence_length", c.sequence_length},
      {"full_peephole", c.full_peephole},
      {"batchnorm_momentum", m.params().bn1.momentum},
      {"batchnorm_epsilon", m.params().bn1.epsilon},
  };
  const auto& t = ck.train_config;
  meta["train_config"] = {
      {"optimizer", "adam"},
      {"learning_rate", t.learning_rate},
      {"decay", t.decay},
      {"batch_size", t.batch_size},
      {"max_epochs", t.max_epochs},
      {"early_stop_patience", t.early_stop_patience},
      {"monitor", t.monitor == StopMetric::validation_loss ? "validation_loss"
                                                           : "validation_accuracy"},
      {"seed", t.seed},
  };
  meta["class_names"] = m.class_names();
  meta["layout"] = json::array();
  for (const auto& s : m.layout()) meta["layout"].push_back({{"name", s.name}, {"dim", s.dim}});
  meta["layout_hash"] = hex64(m.layout_hash());
  json epochs = json::array();
  for (const auto& e : ck.history.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", double_or_null(e.train_loss)},
                      {"train_accuracy", double_or_null(e.train_accuracy)},
                      {"has_validation", e.has_validation},
                      {"validation_loss", double_or_null(e.validation_loss)},
                      {"validation_accuracy", double_or_null(e.validation_accuracy)}});
  meta["history"] = {{"epochs", epochs},
                     {"best_epoch", ck.history.best_epoch},
                     {"stopped_early", ck.history.stopped_early}};
  return meta;
}

}  // namespace

Bytes encode_checkpoint(const Checkpoint& checkpoint) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.str(metadata_of(checkpoint).dump());

  auto params = checkpoint.model.params();  // copy: views need mutable storage
  auto tensors = params.params();
  for (auto& v : params.state()) tensors.push_back(v);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(t.rows));
    w.u32(static_cast<std::uint32_t>(t.cols));
    const auto m = t.map();
    for (Eigen::Index r = 0; r < t.rows; ++r)
      for (Eigen::Index c = 0; c < t.cols; ++c) w.f32(m(r, c));
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0)
    throw LoadError("not a checkpoint (bad magic)");
  ByteReader r(bytes);
  r.bytes(4);
  const auto version = r.u32();
  if (version != kVersion)
    throw LoadError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kVersion) + ")");

  Checkpoint ck;
  json meta;
  try {
    meta = json::parse(r.str());
  } catch (const json::exception& e) {
    throw LoadError(std::string("checkpoint metadata: ") + e.what());
  }

  try {
    if (!meta.contains("layout_hash")) throw LoadError("checkpoint has no layout hash");
    const auto& jc = meta.at("config");
    ModelConfig config;
    config.input_dim = jc.at("input_dim").get<std::size_t>();
    config.lstm_hidden = jc.at("lstm_hidden").get<std::size_t>();
    config.num_classes = jc.at("num_classes").get<std::size_t>();
    config.activation = activation_from_string(jc.at("activation").get<std::string>());
    config.sequence_length = jc.at("sequence_length").get<std::size_t>();
    config.full_peephole = jc.at("full_peephole").get<bool>();
    config.validate();

    const auto& jt = meta.at("train_config");
    auto& t = ck.train_config;
    t.learning_rate = jt.at("learning_rate").get<double>();
    t.decay = jt.at("decay").get<double>();
    t.batch_size = jt.at("batch_size").get<std::size_t>();
    t.max_epochs = jt.at("max_epochs").get<std::size_t>();
    t.early_stop_patience = jt.at("early_stop_patience").get<std::size_t>();
    t.monitor = jt.at("monitor").get<std::string>() == "validation_accuracy"
                    ? StopMetric::validation_accuracy
                    : StopMetric::validation_loss;
    t.seed = jt.at("seed").get<std::uint64_t>();

    StreamLayout layout;
    for (const auto& s : meta.at("layout"))
      layout.push_back({s.at("name").get<std::string>(), s.at("dim").get<std::size_t>()});
    if (meta.at("layout_hash").get<std::string>() != hex64(layout_hash(layout)))
      throw LoadError("checkpoint layout hash does not match its stream layout");

    for (const auto& e : meta.at("history").at("epochs")) {
      EpochRecord rec;
      rec.epoch = e.at("epoch").get<std::size_t>();
      rec.train_loss = null_or_double(e.at("train_loss"));
      rec.train_accuracy = null_or_double(e.at("train_accuracy"));
      rec.has_validation = e.at("has_validation").get<bool>();
      rec.validation_loss = null_or_double(e.at("validation_loss"));
      rec.validation_accuracy = null_or_double(e.at("validation_accuracy"));
      ck.history.epochs.push_back(rec);
    }
    ck.history.best_epoch = meta.at("history").at("best_epoch").get<std::size_t>();
    ck.history.stopped_early = meta.at("history").at("stopped_early").get<bool>();

    auto params = nn::ClassifierParams<float>::zeros(config.shape());
    params.bn1.momentum = params.bn2.momentum = jc.at("batchnorm_momentum").get<float>();
    params.bn1.epsilon = params.bn2.epsilon = jc.at("batchnorm_epsilon").get<float>();
    auto views = params.params();
    for (auto& v : params.state()) views.push_back(v);
    std::map<std::string, nn::ParamView<float>> by_name;
    for (const auto& v : views) by_name.emplace(v.name, v);

    const auto count = r.u32();
    if (count != views.size())
      throw LoadError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                      std::to_string(views.size()));
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto name = r.str();
      const auto it = by_name.find(name);
      if (it == by_name.end()) throw LoadError("unexpected tensor '" + name + "'");
      const auto rank = r.u32();
      if (rank != 2) throw LoadError("tensor '" + name + "' has unsupported rank");
      const auto rows = r.u32();
      const auto cols = r.u32();
      auto& view = it->second;
      if (rows != view.rows || cols != view.cols)
        throw LoadError("tensor '" + name + "' has the wrong shape");
      if (static_cast<std::size_t>(rows) * cols * 4 > r.remaining())
        throw LoadError("checkpoint truncated in tensor '" + name + "'");
      auto m = view.map();
      for (Eigen::Index i = 0; i < view.rows; ++i)
        for (Eigen::Index j = 0; j < view.cols; ++j) m(i, j) = r.f32();
      by_name.erase(it);
    }
    if (r.remaining() != 0) throw LoadError("trailing bytes after checkpoint tensors");

    ck.model = SequenceClassifier(config, std::move(layout),
                                  meta.at("class_names").get<std::vector<std::string>>(),
                                  std::move(params));
  } catch (const json::exception& e) {
    throw LoadError(std::string("checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint config: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace dancecls
