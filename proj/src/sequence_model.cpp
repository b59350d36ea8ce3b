// SPDX-License-Identifier: Apache-2.0
#include "dancecls/sequence_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dancecls/errors.hpp"

namespace dancecls {

void ModelConfig::validate() const {
  if (input_dim < 1) throw ConfigError("model input dimension must be >= 1");
  if (lstm_hidden < 8)
    throw ConfigError("LSTM width " + std::to_string(lstm_hidden) +
                      " is below 8; the quarter/half dense head would collapse");
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (sequence_length < 1) throw ConfigError("sequence length must be >= 1");
}

nn::NetworkShape ModelConfig::shape() const {
  nn::NetworkShape s;
  s.input_dim = static_cast<Eigen::Index>(input_dim);
  s.hidden_dim = static_cast<Eigen::Index>(lstm_hidden);
  s.dense1 = static_cast<Eigen::Index>(dense1());
  s.dense2 = static_cast<Eigen::Index>(dense2());
  s.num_classes = static_cast<Eigen::Index>(num_classes);
  s.full_peephole = full_peephole;
  s.activation = activation;
  return s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(decay >= 0.0)) throw ConfigError("decay must be non-negative");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2 for batch normalisation");
  if (max_epochs < 1) throw ConfigError("max epochs must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("patience must be >= 1");
}

std::string to_string(nn::Activation a) {
  switch (a) {
    case nn::Activation::relu:
      return "relu";
    case nn::Activation::tanh:
      return "tanh";
    case nn::Activation::linear:
      return "linear";
  }
  return "relu";
}

nn::Activation activation_from_string(const std::string& s) {
  if (s == "relu") return nn::Activation::relu;
  if (s == "tanh") return nn::Activation::tanh;
  if (s == "linear") return nn::Activation::linear;
  throw ConfigError("unknown activation '" + s + "'");
}

// ---------------------------------------------------------------- model

SequenceClassifier::SequenceClassifier(ModelConfig config, StreamLayout layout,
                                       std::vector<std::string> class_names,
                                       nn::ClassifierParams<float> params)
    : config_(std::move(config)),
      layout_(std::move(layout)),
      class_names_(std::move(class_names)),
      params_(std::move(params)) {}

void SequenceClassifier::check_compatible(const FeatureChunk& chunk) const {
  if (chunk.layout != layout_)
    throw InputError("clip '" + chunk.clip_id + "' has feature layout " +
                     describe_layout(chunk.layout) + " but the model was trained on " +
                     describe_layout(layout_));
  if (chunk.dim() != config_.input_dim)
    throw InputError("clip '" + chunk.clip_id + "' has " + std::to_string(chunk.dim()) +
                     " feature columns, model expects " + std::to_string(config_.input_dim));
}

nn::Mat<float> SequenceClassifier::probabilities(std::span<const FeatureChunk> chunks) const {
  std::vector<const FeatureChunk*> ptrs;
  for (const auto& c : chunks) {
    check_compatible(c);
    ptrs.push_back(&c);
  }
  const auto inputs = batch_inputs(ptrs);
  nn::ClassifierCache<float> cache;
  return nn::classifier_forward<float>(params_, inputs, nn::Mode::infer, cache);
}

SequenceClassifier build_model(const ModelConfig& config, const StreamLayout& layout,
                               std::vector<std::string> class_names, std::uint64_t seed) {
  config.validate();
  if (layout_dim(layout) != config.input_dim)
    throw ConfigError("stream layout " + describe_layout(layout) + " covers " +
                      std::to_string(layout_dim(layout)) + " columns, model input is " +
                      std::to_string(config.input_dim));
  if (class_names.empty())
    for (std::size_t c = 0; c < config.num_classes; ++c) class_names.push_back("class" + std::to_string(c));
  if (class_names.size() != config.num_classes)
    throw ConfigError("class name count does not match num_classes");
  nn::ClassifierParams<float> params;
  params.shape = config.shape();
  nn::initialize(params, seed);
  return {config, layout, std::move(class_names), std::move(params)};
}

int argmax_lowest(std::span<const float> probabilities) {
  int best = 0;
  for (std::size_t k = 1; k < probabilities.size(); ++k)
    if (probabilities[k] > probabilities[best]) best = static_cast<int>(k);
  return best;
}

std::vector<Prediction> predict_all(const SequenceClassifier& model,
                                    std::span<const FeatureChunk> chunks) {
  std::vector<Prediction> out;
  if (chunks.empty()) return out;
  const auto probs = model.probabilities(chunks);
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    Prediction p;
    p.probabilities.assign(probs.col(j).data(), probs.col(j).data() + probs.rows());
    p.class_index = argmax_lowest(p.probabilities);
    out.push_back(std::move(p));
  }
  return out;
}

Prediction predict(const SequenceClassifier& model, const FeatureChunk& chunk) {
  return predict_all(model, std::span<const FeatureChunk>(&chunk, 1)).front();
}

std::vector<nn::Mat<float>> batch_inputs(std::span<const FeatureChunk* const> chunks) {
  if (chunks.empty()) throw ContractError("empty batch");
  const auto T = chunks.front()->matrix.rows();
  const auto D = chunks.front()->matrix.cols();
  const auto B = static_cast<Eigen::Index>(chunks.size());
  std::vector<nn::Mat<float>> steps(static_cast<std::size_t>(T), nn::Mat<float>(D, B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& m = chunks[b]->matrix;
    if (m.rows() != T || m.cols() != D)
      throw ContractError("clips in one batch must share sequence length and width");
    for (Eigen::Index t = 0; t < T; ++t) steps[t].col(b) = m.row(t).transpose();
  }
  return steps;
}

// ---------------------------------------------------------------- training

bool EarlyStopping::observe(std::size_t epoch, double metric) {
  if (metric < best_) {
    best_ = metric;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

std::vector<int> labels_of(std::span<const FeatureChunk* const> chunks) {
  std::vector<int> labels;
  for (const auto* c : chunks) {
    if (!c->label) throw ContractError("clip '" + c->clip_id + "' has no label");
    labels.push_back(*c->label);
  }
  return labels;
}

double accuracy_of(const nn::Mat<float>& probs, std::span<const int> labels) {
  std::size_t correct = 0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    const int pred = argmax_lowest(std::span<const float>(probs.col(j).data(), probs.rows()));
    if (pred == labels[j]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::string parameter_norms(nn::ClassifierParams<float>& params) {
  std::ostringstream out;
  for (const auto& p : params.params()) out << ' ' << p.name << '=' << p.map().norm();
  return out.str();
}

// Batch boundaries over `n` shuffled samples; a trailing singleton joins the
// previous batch.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t begin = 0; begin < n; begin += size)
    out.emplace_back(begin, std::min(n, begin + size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

}  // namespace

LossAccuracy evaluate_loss(const SequenceClassifier& model, std::span<const FeatureChunk> chunks) {
  if (chunks.empty()) throw ContractError("evaluate_loss: no clips");
  const auto probs = model.probabilities(chunks);
  std::vector<const FeatureChunk*> ptrs;
  for (const auto& c : chunks) ptrs.push_back(&c);
  const auto labels = labels_of(ptrs);
  return {static_cast<double>(nn::cross_entropy<float>(probs, labels)), accuracy_of(probs, labels)};
}

double train_step(SequenceClassifier& model, nn::Adam<float>& optimizer,
                  std::span<const FeatureChunk* const> batch, double* accuracy) {
  for (const auto* c : batch) model.check_compatible(*c);
  const auto labels = labels_of(batch);
  const auto inputs = batch_inputs(batch);
  auto& params = model.params();
  nn::ClassifierCache<float> cache;
  const auto probs = nn::classifier_forward<float>(params, inputs, nn::Mode::train, cache);
  const double loss = nn::cross_entropy<float>(probs, labels);
  if (!std::isfinite(loss)) throw TrainingError("non-finite batch loss");
  if (accuracy) *accuracy = accuracy_of(probs, labels);
  auto grads = nn::classifier_backward<float>(params, cache, labels);
  optimizer.step(params.params(), grads.params());
  nn::update_running_statistics(params, cache);
  return loss;
}

TrainResult train(std::span<const FeatureChunk> fit, std::span<const FeatureChunk> validation,
                  SequenceClassifier model, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (fit.size() < 2) throw ContractError("training needs at least two clips");
  for (const auto& c : fit) model.check_compatible(c);
  for (const auto& c : validation) model.check_compatible(c);

  const bool early_stopping = !validation.empty() || static_cast<bool>(hooks.validation_loss);
  nn::Adam<float> optimizer(config.adam());
  EarlyStopping stopper(config.early_stop_patience);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{model, {}};
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0, correct_sum = 0;
    std::size_t batch_no = 0;
    for (const auto& [begin, end] : batch_ranges(order.size(), config.batch_size)) {
      ++batch_no;
      std::vector<const FeatureChunk*> batch;
      for (std::size_t k = begin; k < end; ++k) batch.push_back(&fit[order[k]]);
      double acc = 0;
      try {
        const double loss = train_step(model, optimizer, batch, &acc);
        loss_sum += loss * static_cast<double>(batch.size());
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_no) + "; parameter norms:" +
                            parameter_norms(model.params()));
      }
      correct_sum += acc * static_cast<double>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(fit.size());
    rec.train_accuracy = correct_sum / static_cast<double>(fit.size());
    if (!validation.empty()) {
      const auto v = evaluate_loss(model, validation);
      rec.has_validation = true;
      rec.validation_loss = v.loss;
      rec.validation_accuracy = v.accuracy;
    }
    if (hooks.validation_loss) {
      rec.has_validation = true;
      rec.validation_loss = hooks.validation_loss(epoch, model);
    }
    result.history.epochs.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);

    if (!early_stopping) {
      result.model = model;
      result.history.best_epoch = epoch;
      continue;
    }
    const double metric = config.monitor == StopMetric::validation_accuracy && !hooks.validation_loss
                              ? -rec.validation_accuracy
                              : rec.validation_loss;
    if (stopper.observe(epoch, metric)) {
      result.model = model;
      result.history.best_epoch = epoch;
    }
    if (stopper.should_stop()) {
      result.history.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace dancecls
