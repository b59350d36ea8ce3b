// SPDX-License-Identifier: Apache-2.0
//
// The dance-form classifier: configuration, training with early stopping,
// prediction and checkpoints.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dancecls/binary_io.hpp"
#include "dancecls/classifier_net.hpp"
#include "dancecls/feature_fusion.hpp"

namespace dancecls {

struct ModelConfig {
  std::size_t input_dim = 0;
  std::size_t lstm_hidden = 512;
  std::size_t num_classes = 6;
  nn::Activation activation = nn::Activation::relu;
  std::size_t sequence_length = kDefaultSequenceLength;
  bool full_peephole = false;

  /// Quarter of the LSTM width, then half of that.
  std::size_t dense1() const { return lstm_hidden / 4; }
  std::size_t dense2() const { return dense1() / 2; }

  /// Throws ConfigError for D < 1, H < 8 or fewer than two classes.
  void validate() const;
  nn::NetworkShape shape() const;
};

enum class StopMetric { validation_loss, validation_accuracy };

struct TrainConfig {
  double learning_rate = 1e-4;
  double decay = 1e-6;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 5;
  StopMetric monitor = StopMetric::validation_loss;
  std::uint64_t seed = 0;

  void validate() const;
  nn::AdamConfig adam() const { return {learning_rate, decay}; }

  /// Defaults listed with the training-parameter table (lr 1e-4).
  static TrainConfig table_preset() { return {}; }
  /// Learning rate quoted in the experimental protocol text (lr 4e-4).
  static TrainConfig protocol_preset() {
    TrainConfig c;
    c.learning_rate = 4e-4;
    return c;
  }
};

std::string to_string(nn::Activation a);
nn::Activation activation_from_string(const std::string& s);

/// A trained (or freshly initialised) classifier bound to a feature layout.
class SequenceClassifier {
 public:
  SequenceClassifier() = default;
  SequenceClassifier(ModelConfig config, StreamLayout layout, std::vector<std::string> class_names,
                     nn::ClassifierParams<float> params);

  const ModelConfig& config() const { return config_; }
  const StreamLayout& layout() const { return layout_; }
  std::uint64_t layout_hash() const { return dancecls::layout_hash(layout_); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  nn::ClassifierParams<float>& params() { return params_; }
  const nn::ClassifierParams<float>& params() const { return params_; }

  /// Throws InputError when the chunk's stream layout differs from the model's.
  void check_compatible(const FeatureChunk& chunk) const;

  /// C x N class probabilities with batch norm in inference mode.
  nn::Mat<float> probabilities(std::span<const FeatureChunk> chunks) const;

 private:
  ModelConfig config_;
  StreamLayout layout_;
  std::vector<std::string> class_names_;
  nn::ClassifierParams<float> params_;
};

/// New seeded model. `layout` must cover exactly config.input_dim columns.
SequenceClassifier build_model(const ModelConfig& config, const StreamLayout& layout,
                               std::vector<std::string> class_names, std::uint64_t seed);

struct Prediction {
  int class_index = 0;
  std::vector<float> probabilities;
};

/// Highest-probability class; ties go to the lowest index.
int argmax_lowest(std::span<const float> probabilities);
Prediction predict(const SequenceClassifier& model, const FeatureChunk& chunk);
std::vector<Prediction> predict_all(const SequenceClassifier& model,
                                    std::span<const FeatureChunk> chunks);

/// Time-major batch tensors: element t is D x B.
std::vector<nn::Mat<float>> batch_inputs(std::span<const FeatureChunk* const> chunks);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_accuracy = 0;
  bool has_validation = false;
  double validation_loss = std::numeric_limits<double>::quiet_NaN();
  double validation_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 when nothing ran
  bool stopped_early = false;
};

/// Patience counter over a lower-is-better metric.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records the metric of `epoch`. Returns true when the metric improved.
  bool observe(std::size_t epoch, double metric);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct LossAccuracy {
  double loss = 0;
  double accuracy = 0;
};

/// Mean cross-entropy and accuracy in inference mode.
LossAccuracy evaluate_loss(const SequenceClassifier& model, std::span<const FeatureChunk> chunks);

/// One Adam step on one batch (train-mode batch norm, running statistics
/// updated). Returns the pre-step batch loss.
double train_step(SequenceClassifier& model, nn::Adam<float>& optimizer,
                  std::span<const FeatureChunk* const> batch, double* accuracy = nullptr);

struct TrainHooks {
  /// Replaces the computed validation metric; used to drive early stopping
  /// from a scripted trace.
  std::function<double(std::size_t epoch, const SequenceClassifier&)> validation_loss;
  std::function<void(std::size_t epoch, const SequenceClassifier&)> on_epoch_end;
};

struct TrainResult {
  SequenceClassifier model;  // parameters of the best validation epoch
  TrainingHistory history;
};

/// Shuffled mini-batch epochs (a trailing batch of one is merged into the
/// previous batch so train-mode batch norm stays defined). Early stopping is
/// active when `validation` is non-empty or a validation hook is installed.
TrainResult train(std::span<const FeatureChunk> fit, std::span<const FeatureChunk> validation,
                  SequenceClassifier model, const TrainConfig& config,
                  const TrainHooks& hooks = {});

// ---------------------------------------------------------------- checkpoints

struct Checkpoint {
  SequenceClassifier model;
  TrainingHistory history;
  TrainConfig train_config;
};

/// "NRCK" | u32 version | u32 len, JSON metadata | u32 tensor count
/// | { u32 len, name | u32 rank | u32 dims[rank] | f32 data, row-major } ...
Bytes encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dancecls
