#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dancecls/errors.hpp"
#include "dancecls/sequence_model.hpp"
#include "synthetic.hpp"

using namespace dancecls;

namespace {

StreamLayout pose_layout() { return {{"pose", 75}}; }

ModelConfig pose_config(std::size_t hidden = 512) {
  ModelConfig c;
  c.input_dim = 75;
  c.lstm_hidden = hidden;
  return c;
}

// Two classes of 8-column chunks whose mean differs by class.
std::vector<FeatureChunk> separable_chunks(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  std::vector<FeatureChunk> out;
  for (std::size_t k = 0; k < n; ++k) {
    FeatureChunk c;
    c.clip_id = "s" + std::to_string(k);
    c.label = static_cast<int>(k % 2);
    c.layout = {{"synthetic", 8}};
    c.matrix.resize(16, 8);
    const float shift = c.label == 0 ? -1.5f : 1.5f;
    for (Eigen::Index i = 0; i < c.matrix.size(); ++i) c.matrix.data()[i] = noise(rng) + shift;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::vector<float>> snapshot(SequenceClassifier& m) {
  std::vector<std::vector<float>> out;
  for (const auto& v : m.params().params()) out.emplace_back(v.data, v.data + v.size());
  for (const auto& v : m.params().state()) out.emplace_back(v.data, v.data + v.size());
  return out;
}

double train_mode_loss(SequenceClassifier& m, std::span<const FeatureChunk* const> batch) {
  std::vector<int> labels;
  for (const auto* c : batch) labels.push_back(*c->label);
  nn::ClassifierCache<float> cache;
  const auto probs = nn::classifier_forward<float>(m.params(), batch_inputs(batch), nn::Mode::train, cache);
  return nn::cross_entropy<float>(probs, labels);
}

}  // namespace

TEST_SUITE("sequence_model") {

TEST_CASE("head sizes follow the quarter/half rule") {
  ModelConfig full;
  full.input_dim = 2251;
  CHECK(full.dense1() == 128);
  CHECK(full.dense2() == 64);
  const auto model = build_model(full, {{"inception", 2048}, {"kinetics", 128}, {"pose", 75}}, {}, 1);
  CHECK(model.params().lstm.w_xi.rows() == 512);
  CHECK(model.params().lstm.w_xi.cols() == 2251);
  CHECK(model.params().dense1.weight.rows() == 128);
  CHECK(model.params().dense2.weight.rows() == 64);
  CHECK(model.params().output.weight.rows() == 6);

  const auto pose = build_model(pose_config(), pose_layout(), {}, 1);
  CHECK(pose.params().lstm.w_xi.cols() == 75);
  CHECK(pose.params().dense1.weight.rows() == 128);

  ModelConfig odd = pose_config(50);
  CHECK(odd.dense1() == 12);
  CHECK(odd.dense2() == 6);
}

TEST_CASE("invalid model configurations") {
  CHECK_THROWS_AS(build_model(pose_config(4), pose_layout(), {}, 1), ConfigError);
  CHECK_THROWS_AS(build_model(pose_config(8), {{"pose", 74}}, {}, 1), ConfigError);
  ModelConfig zero = pose_config();
  zero.input_dim = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  CHECK_NOTHROW(build_model(pose_config(8), pose_layout(), {}, 1));
  TrainConfig t;
  t.early_stop_patience = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  CHECK_THROWS_AS(activation_from_string("gelu"), ConfigError);
}

TEST_CASE("presets carry the documented defaults") {
  const auto t = TrainConfig::table_preset();
  CHECK(t.learning_rate == 1e-4);
  CHECK(t.decay == 1e-6);
  CHECK(t.batch_size == 32);
  CHECK(t.max_epochs == 100);
  CHECK(t.early_stop_patience == 5);
  CHECK(TrainConfig::protocol_preset().learning_rate == 4e-4);
}

TEST_CASE("same seed, same parameters") {
  auto a = build_model(pose_config(32), pose_layout(), {}, 5);
  auto b = build_model(pose_config(32), pose_layout(), {}, 5);
  auto c = build_model(pose_config(32), pose_layout(), {}, 6);
  CHECK(snapshot(a) == snapshot(b));
  CHECK(snapshot(a) != snapshot(c));
}

TEST_CASE("untrained model is near uniform") {
  const auto chunks = testing::synthetic_pose_chunks(4, 3);
  const auto model = build_model(pose_config(), pose_layout(), {}, 2);
  const auto probs = model.probabilities(chunks);
  const float lo = probs.minCoeff(), hi = probs.maxCoeff();
  MESSAGE("untrained probability range [" << lo << ", " << hi << "]");
  CHECK(lo >= 0.05f);
  CHECK(hi <= 0.35f);
  for (Eigen::Index j = 0; j < probs.cols(); ++j) CHECK(std::abs(probs.col(j).sum() - 1.0f) < 1e-6f);
}

TEST_CASE("zero-weight model gives exactly 1/6") {
  auto model = build_model(pose_config(16), pose_layout(), {}, 2);
  auto& p = model.params();
  p = nn::ClassifierParams<float>::zeros(p.shape);
  const auto chunks = testing::synthetic_pose_chunks(1, 4);
  const auto pred = predict(model, chunks[3]);
  for (float v : pred.probabilities) CHECK(v == 1.0f / 6.0f);
  CHECK(pred.class_index == 0);
}

TEST_CASE("identical chunks give identical rows; forward is pure") {
  const auto chunks = testing::synthetic_pose_chunks(1, 5);
  const auto model = build_model(pose_config(32), pose_layout(), {}, 3);
  const std::vector<FeatureChunk> same = {chunks[2], chunks[2], chunks[2]};
  const auto probs = model.probabilities(same);
  CHECK(probs.col(0) == probs.col(1));
  CHECK(probs.col(0) == probs.col(2));
  CHECK(model.probabilities(chunks) == model.probabilities(chunks));
}

TEST_CASE("argmax ties go to the lowest index") {
  const float a[] = {0.1f, 0.5f, 0.1f, 0.1f, 0.1f, 0.1f};
  CHECK(argmax_lowest(a) == 1);
  const float tie[] = {0.1f, 0.1f, 0.3f, 0.1f, 0.3f, 0.1f};
  CHECK(argmax_lowest(tie) == 2);
}

TEST_CASE("layout mismatch is an input error") {
  const auto model = build_model(pose_config(16), pose_layout(), {}, 1);
  auto chunk = testing::synthetic_pose_chunks(1, 6)[0];
  chunk.layout = {{"kinetics", 75}};
  CHECK_THROWS_AS(predict(model, chunk), InputError);
  FeatureChunk wide;
  wide.layout = {{"inception", 2048}, {"kinetics", 128}, {"pose", 75}};
  wide.matrix = FeatureMatrix::Zero(48, 2251);
  CHECK_THROWS_AS(predict(model, wide), InputError);
}

TEST_CASE("early stopping rule") {
  EarlyStopping s(5);
  const double trace[] = {1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95};
  std::size_t stopped = 0;
  for (std::size_t e = 1; e <= 7; ++e) {
    s.observe(e, trace[e - 1]);
    if (s.should_stop()) {
      stopped = e;
      break;
    }
  }
  CHECK(stopped == 7);
  CHECK(s.best_epoch() == 2);
  EarlyStopping eq(2);
  eq.observe(1, 0.5);
  eq.observe(2, 0.5);
  CHECK_FALSE(eq.should_stop());
  eq.observe(3, 0.5);
  CHECK(eq.should_stop());
}

TEST_CASE("injected trace stops at epoch 7 and restores epoch 2") {
  const auto chunks = testing::synthetic_pose_chunks(2, 7);
  auto model = build_model(pose_config(16), pose_layout(), {}, 1);
  const double trace[] = {1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95, 0.1, 0.1};
  std::vector<std::vector<std::vector<float>>> snaps;
  TrainHooks hooks;
  hooks.validation_loss = [&](std::size_t e, const SequenceClassifier&) { return trace[e - 1]; };
  hooks.on_epoch_end = [&](std::size_t, const SequenceClassifier& m) {
    auto copy = m;
    snaps.push_back(snapshot(copy));
  };
  TrainConfig cfg;
  cfg.batch_size = 4;
  auto result = train(chunks, {}, model, cfg, hooks);
  CHECK(result.history.epochs.size() == 7);
  CHECK(result.history.stopped_early);
  CHECK(result.history.best_epoch == 2);
  CHECK(snapshot(result.model) == snaps.at(1));
  CHECK(snapshot(result.model) != snaps.at(6));
}

TEST_CASE("a trace that never stalls runs to max epochs") {
  const auto chunks = testing::synthetic_pose_chunks(1, 8);
  auto model = build_model(pose_config(8), pose_layout(), {}, 1);
  TrainHooks hooks;
  hooks.validation_loss = [](std::size_t e, const SequenceClassifier&) { return 10.0 - 0.01 * e; };
  TrainConfig cfg;
  cfg.batch_size = 6;
  const auto result = train(chunks, {}, model, cfg, hooks);
  CHECK(result.history.epochs.size() == 100);
  CHECK_FALSE(result.history.stopped_early);
  CHECK(result.history.best_epoch == 100);
}

TEST_CASE("returned model matches the best validation loss") {
  const auto fit = testing::synthetic_pose_chunks(4, 9);
  const auto val = testing::synthetic_pose_chunks(1, 10);
  auto model = build_model(pose_config(32), pose_layout(), {}, 1);
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.max_epochs = 30;
  cfg.batch_size = 8;
  const auto result = train(fit, val, model, cfg);
  double best = 1e300;
  for (const auto& e : result.history.epochs) best = std::min(best, e.validation_loss);
  CHECK(result.history.epochs[result.history.best_epoch - 1].validation_loss == best);
  CHECK(std::abs(evaluate_loss(result.model, val).loss - best) < 1e-7);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto fit = testing::synthetic_pose_chunks(3, 11);
  const auto val = testing::synthetic_pose_chunks(1, 12);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.batch_size = 5;
  cfg.seed = 7;
  auto a = train(fit, val, build_model(pose_config(16), pose_layout(), {}, 7), cfg);
  auto b = train(fit, val, build_model(pose_config(16), pose_layout(), {}, 7), cfg);
  CHECK(snapshot(a.model) == snapshot(b.model));
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  for (std::size_t k = 0; k < a.history.epochs.size(); ++k) {
    CHECK(a.history.epochs[k].train_loss == b.history.epochs[k].train_loss);
    CHECK(a.history.epochs[k].validation_loss == b.history.epochs[k].validation_loss);
  }
}

TEST_CASE("a small step lowers the batch loss") {
  const auto chunks = testing::synthetic_pose_chunks(2, 13);
  auto model = build_model(pose_config(32), pose_layout(), {}, 4);
  std::vector<const FeatureChunk*> batch;
  for (const auto& c : chunks) batch.push_back(&c);
  auto probe = model;
  const double before = train_mode_loss(probe, batch);
  nn::Adam<float> opt({1e-5, 0.0});
  train_step(model, opt, batch);
  const double after = train_mode_loss(model, batch);
  MESSAGE("batch loss " << before << " -> " << after);
  CHECK(after < before);
}

TEST_CASE("separable two-class set reaches full training accuracy") {
  const auto chunks = separable_chunks(40, 14);
  ModelConfig cfg;
  cfg.input_dim = 8;
  cfg.num_classes = 2;
  cfg.lstm_hidden = 64;
  auto model = build_model(cfg, {{"synthetic", 8}}, {"neg", "pos"}, 3);
  TrainConfig t;
  const auto result = train(chunks, {}, model, t);
  CHECK(result.history.epochs.size() == 100);
  double best = 0;
  for (const auto& e : result.history.epochs) best = std::max(best, e.train_accuracy);
  MESSAGE("best epoch train accuracy " << best);
  CHECK(evaluate_loss(result.model, chunks).accuracy == 1.0);
}

TEST_CASE("trailing singleton batch is merged") {
  const auto chunks = testing::synthetic_pose_chunks(1, 15);  // 6 chunks
  auto model = build_model(pose_config(8), pose_layout(), {}, 1);
  TrainConfig cfg;
  cfg.batch_size = 5;
  cfg.max_epochs = 2;
  CHECK_NOTHROW(train(chunks, {}, model, cfg));
}

TEST_CASE("non-finite loss aborts with diagnostics") {
  auto chunks = testing::synthetic_pose_chunks(1, 16);
  chunks[0].matrix(0, 0) = std::numeric_limits<float>::infinity();
  auto model = build_model(pose_config(8), pose_layout(), {}, 1);
  TrainConfig cfg;
  cfg.batch_size = 6;
  try {
    train(chunks, {}, model, cfg);
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch 1") != std::string::npos);
    CHECK(msg.find("lstm.w_xi=") != std::string::npos);
  }
}

}  // TEST_SUITE
