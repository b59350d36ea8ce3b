// SPDX-License-Identifier: Apache-2.0
#include "dancecls/cli.hpp"

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dancecls/errors.hpp"
#include "dancecls/evaluation.hpp"
#include "dancecls/pose_signature.hpp"
#include "dancecls/sequence_model.hpp"

namespace dancecls {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

void write_echo(const fs::path& path, const std::string& subcommand, json settings) {
  settings["subcommand"] = subcommand;
  write_text_file(path, settings.dump(2) + "\n");
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

json history_json(const TrainingHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    json j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_accuracy", e.train_accuracy}};
    if (e.has_validation) {
      j["validation_loss"] = std::isfinite(e.validation_loss) ? json(e.validation_loss) : json(nullptr);
      j["validation_accuracy"] =
          std::isfinite(e.validation_accuracy) ? json(e.validation_accuracy) : json(nullptr);
    }
    epochs.push_back(std::move(j));
  }
  return {{"epochs", epochs}, {"best_epoch", h.best_epoch}, {"stopped_early", h.stopped_early}};
}

std::string checkpoint_label(const SequenceClassifier& model) {
  std::vector<std::string> names;
  for (const auto& s : model.layout()) names.push_back(s.name);
  return join(names, "+");
}

// Shared stream/sample flags.
struct StreamFlags {
  std::string streams = "inception,kinetics,pose";
  std::string segment_streams = "kinetics";
  std::size_t sample_len = kDefaultSequenceLength;

  void add_to(CLI::App* app) {
    app->add_option("--streams", streams, "Comma-separated streams in fusion order")
        ->capture_default_str();
    app->add_option("--segment-streams", segment_streams,
                    "Streams whose files may hold 16x128 segment vectors")
        ->capture_default_str();
    app->add_option("--sample-len", sample_len, "Frames per training chunk")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  ChunkOptions options() const {
    ChunkOptions o;
    o.streams = split_list(streams);
    o.segment_streams = split_list(segment_streams);
    o.sample_len = sample_len;
    if (o.streams.empty()) throw ConfigError("--streams lists no streams");
    return o;
  }

  json echo() const {
    return {{"streams", split_list(streams)},
            {"segment_streams", split_list(segment_streams)},
            {"sample_len", sample_len}};
  }
};

// ---------------------------------------------------------------- signature

struct SignatureArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
  std::size_t sample_len = kDefaultSequenceLength;
  unsigned jobs = 1;
};

int cmd_signature(const SignatureArgs& a, std::ostream& out, std::ostream& err) {
  fs::create_directories(a.out_dir);
  struct Result {
    bool ok = false;
    std::string clip_id, output, error;
    std::size_t frames = 0;
    std::optional<int> label;
  };
  std::vector<Result> results(a.inputs.size());

  auto work = [&](std::size_t k) {
    auto& r = results[k];
    try {
      const auto seq = load_skeleton_file(a.inputs[k]);
      const auto stream = pose_stream(seq, a.sample_len);
      const fs::path target = fs::path(a.out_dir) / (seq.clip_id + ".pose.nrft");
      write_file(target, encode_feature_stream(stream));
      r = {true, seq.clip_id, target.filename().string(), "", seq.frames.size(), seq.label};
    } catch (const Error& e) {
      r.error = e.what();
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(a.inputs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < a.inputs.size(); k += jobs) work(k);
    });
  for (auto& t : pool) t.join();

  json index = json::array();
  std::size_t failed = 0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    if (!r.ok) {
      ++failed;
      err << "signature: " << a.inputs[k] << ": " << r.error << '\n';
      index.push_back({{"source", a.inputs[k]}, {"error", r.error}});
      continue;
    }
    json item = {{"clip_id", r.clip_id}, {"source", a.inputs[k]}, {"output", r.output},
                 {"frames", r.frames}, {"rows", a.sample_len}, {"dim", PoseSignature::kDim}};
    if (r.label) item["label"] = *r.label;
    index.push_back(std::move(item));
  }
  write_text_file(fs::path(a.out_dir) / "index.json", index.dump(2) + "\n");
  write_echo(fs::path(a.out_dir) / "config.json", "signature",
             {{"inputs", a.inputs}, {"out", a.out_dir}, {"sample_len", a.sample_len}, {"jobs", a.jobs}});
  out << "signature: " << (results.size() - failed) << " of " << results.size()
      << " clips written to " << a.out_dir << '\n';
  return failed == 0 ? kExitOk : kExitPartialFailure;
}

// ---------------------------------------------------------------- fuse

int cmd_fuse(const std::string& manifest_path, const std::string& out_dir, const StreamFlags& sf,
             std::ostream& out, std::ostream& err) {
  const auto manifest = load_manifest(manifest_path);
  const auto opts = sf.options();
  fs::create_directories(out_dir);
  json index = json::array();
  std::size_t failed = 0;
  for (const auto& e : manifest.entries) {
    try {
      const auto chunk = build_chunk(manifest, e, opts);
      const auto name = e.clip_id + ".chunk";
      write_file(fs::path(out_dir) / name, encode_chunk(chunk));
      index.push_back({{"clip_id", e.clip_id}, {"label", e.label}, {"output", name},
                       {"layout", describe_layout(chunk.layout)}});
    } catch (const Error& ex) {
      ++failed;
      err << "fuse: " << ex.what() << '\n';
      index.push_back({{"clip_id", e.clip_id}, {"error", ex.what()}});
    }
  }
  write_text_file(fs::path(out_dir) / "index.json", index.dump(2) + "\n");
  auto echo = sf.echo();
  echo["manifest"] = manifest_path;
  echo["out"] = out_dir;
  write_echo(fs::path(out_dir) / "config.json", "fuse", echo);
  out << "fuse: " << (manifest.entries.size() - failed) << " of " << manifest.entries.size()
      << " chunks written to " << out_dir << '\n';
  return failed == 0 ? kExitOk : kExitPartialFailure;
}

// ---------------------------------------------------------------- split

int cmd_split(const std::string& manifest_path, double fraction, std::uint64_t seed,
              const std::string& out_train, const std::string& out_test, std::ostream& out) {
  auto manifest = load_manifest(manifest_path);
  auto [train, test] = split_dataset(manifest, fraction, seed);
  // Written paths stay valid relative to the new manifest's directory.
  const auto rebase = [&](DatasetManifest& m, const fs::path& target) {
    const auto dir = fs::absolute(target).parent_path();
    for (auto& e : m.entries) {
      if (!e.skeleton.empty())
        e.skeleton = fs::relative(fs::absolute(manifest.resolve(e.skeleton)), dir).string();
      for (auto& [name, p] : e.features)
        p = fs::relative(fs::absolute(manifest.resolve(p)), dir).string();
    }
  };
  rebase(train, out_train);
  rebase(test, out_test);
  save_manifest(train, out_train);
  save_manifest(test, out_test);
  write_echo(with_suffix(out_train, ".config.json"), "split",
             {{"manifest", manifest_path}, {"train_fraction", fraction}, {"seed", seed},
              {"out_train", out_train}, {"out_test", out_test}});
  out << "split: " << train.entries.size() << " train / " << test.entries.size() << " test\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest;
  std::string out = "model.nrck";
  StreamFlags streams;
  std::uint64_t seed = 0;
  std::size_t hidden = 512;
  std::string preset = "table";
  std::optional<double> lr;
  double decay = 1e-6;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double train_fraction = 0.7;
  double val_fraction = 0.1;
  std::string monitor = "loss";
  std::string activation = "relu";
  bool full_peephole = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto manifest = load_manifest(a.manifest);
  const auto opts = a.streams.options();
  const fs::path ck_path(a.out);
  if (ck_path.has_parent_path()) fs::create_directories(ck_path.parent_path());

  DatasetManifest train_set = manifest;
  if (a.train_fraction < 1.0) {
    auto [tr, te] = split_dataset(manifest, a.train_fraction, a.seed);
    train_set = std::move(tr);
    save_manifest(te, with_suffix(ck_path, ".test.json"));
  }
  save_manifest(train_set, with_suffix(ck_path, ".train.json"));
  auto carved = carve_validation(train_set, a.val_fraction, a.seed + 1);

  const auto fit = build_chunks(carved.fit, opts);
  const auto val = build_chunks(carved.validation, opts);

  TrainConfig tc = a.preset == "protocol" ? TrainConfig::protocol_preset() : TrainConfig::table_preset();
  if (a.preset != "table" && a.preset != "protocol")
    throw ConfigError("unknown preset '" + a.preset + "' (table|protocol)");
  if (a.lr) tc.learning_rate = *a.lr;
  tc.decay = a.decay;
  tc.batch_size = a.batch_size;
  tc.max_epochs = a.max_epochs;
  tc.early_stop_patience = a.patience;
  tc.seed = a.seed;
  if (a.monitor == "accuracy") tc.monitor = StopMetric::validation_accuracy;
  else if (a.monitor != "loss") throw ConfigError("--monitor must be loss or accuracy");

  ModelConfig mc;
  mc.input_dim = fit.front().dim();
  mc.lstm_hidden = a.hidden;
  mc.num_classes = manifest.num_classes();
  mc.activation = activation_from_string(a.activation);
  mc.sequence_length = opts.sample_len;
  mc.full_peephole = a.full_peephole;

  auto model = build_model(mc, fit.front().layout, manifest.class_names, a.seed + 2);
  auto result = train(fit, val, std::move(model), tc);

  Checkpoint ck{std::move(result.model), result.history, tc};
  save_checkpoint(ck, ck_path);
  write_text_file(with_suffix(ck_path, ".history.json"), history_json(result.history).dump(2) + "\n");

  auto echo = a.streams.echo();
  echo.update(json{{"manifest", a.manifest},
                   {"out", a.out},
                   {"seed", a.seed},
                   {"hidden", mc.lstm_hidden},
                   {"dense1", mc.dense1()},
                   {"dense2", mc.dense2()},
                   {"input_dim", mc.input_dim},
                   {"activation", a.activation},
                   {"full_peephole", a.full_peephole},
                   {"preset", a.preset},
                   {"lr", tc.learning_rate},
                   {"decay", tc.decay},
                   {"batch_size", tc.batch_size},
                   {"max_epochs", tc.max_epochs},
                   {"patience", tc.early_stop_patience},
                   {"monitor", a.monitor},
                   {"train_fraction", a.train_fraction},
                   {"val_fraction", a.val_fraction},
                   {"early_stopping", carved.early_stopping},
                   {"fit_clips", fit.size()},
                   {"validation_clips", val.size()}});
  write_echo(with_suffix(ck_path, ".config.json"), "train", echo);

  const auto& last = result.history.epochs.back();
  out << "train: " << result.history.epochs.size() << " epochs, best epoch "
      << result.history.best_epoch << ", final train loss " << last.train_loss << ", D="
      << mc.input_dim << " (" << describe_layout(ck.model.layout()) << ")\n";
  out << "checkpoint: " << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const std::vector<std::string>& checkpoints, const std::string& manifest_path,
                 const std::string& prefix, const std::string& segment_streams, std::ostream& out) {
  const auto manifest = load_manifest(manifest_path);
  std::vector<AblationRow> rows;
  std::vector<std::string> class_names;
  const bool ablation = checkpoints.size() > 1;
  for (const auto& ck_path : checkpoints) {
    const auto ck = load_checkpoint(ck_path);
    const auto& model = ck.model;
    ChunkOptions opts;
    opts.streams.clear();
    for (const auto& s : model.layout()) opts.streams.push_back(s.name);
    opts.segment_streams = split_list(segment_streams);
    opts.sample_len = model.config().sequence_length;
    const auto chunks = build_chunks(manifest, opts);

    std::vector<int> preds, labels;
    for (const auto& p : predict_all(model, chunks)) preds.push_back(p.class_index);
    for (const auto& c : chunks) labels.push_back(*c.label);
    const auto cm = confusion_matrix(preds, labels, model.class_names().size(), model.class_names());
    const auto report = per_class_metrics(cm, fs::path(ck_path).filename().string());
    class_names = model.class_names();

    const std::string stem = ablation ? prefix + "." + checkpoint_label(model) : prefix;
    write_text_file(stem + ".report.txt", render_text(report));
    write_text_file(stem + ".report.json", render_json(report));
    write_text_file(stem + ".confusion.txt", render_confusion_text(cm));
    write_text_file(stem + ".confusion.json", render_confusion_json(cm));
    if (ablation) out << "== " << checkpoint_label(model) << " ==\n";
    out << render_text(report);
    rows.push_back(ablation_row(checkpoint_label(model), report));
  }
  if (ablation) {
    const auto table = render_ablation_table(class_names, rows);
    write_text_file(prefix + ".ablation.txt", table);
    out << '\n' << table;
  }
  write_echo(prefix + ".config.json", "evaluate",
             {{"checkpoints", checkpoints}, {"manifest", manifest_path}, {"out_prefix", prefix},
              {"segment_streams", split_list(segment_streams)}});
  return kExitOk;
}

// ---------------------------------------------------------------- predict

int cmd_predict(const std::string& ck_path, const std::string& skeleton,
                const std::vector<std::string>& features, const std::string& segment_streams,
                const std::string& echo_path, std::ostream& out) {
  const auto ck = load_checkpoint(ck_path);
  const auto& model = ck.model;

  DatasetManifest m;
  m.class_names = model.class_names();
  ManifestEntry e;
  e.clip_id = skeleton.empty() ? "input" : fs::path(skeleton).stem().string();
  e.skeleton = skeleton;
  for (const auto& f : features) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw InputError("--feature expects name=path, got '" + f + "'");
    e.features[f.substr(0, eq)] = f.substr(eq + 1);
  }
  ChunkOptions opts;
  opts.streams.clear();
  for (const auto& s : model.layout()) opts.streams.push_back(s.name);
  opts.segment_streams = split_list(segment_streams);
  opts.sample_len = model.config().sequence_length;
  const auto chunk = build_chunk(m, e, opts);
  const auto pred = predict(model, chunk);

  out << "class: " << model.class_names()[pred.class_index] << " (" << pred.class_index << ")\n";
  out << std::fixed << std::setprecision(6);
  for (std::size_t c = 0; c < pred.probabilities.size(); ++c)
    out << "  " << model.class_names()[c] << ' ' << pred.probabilities[c] << '\n';
  out << std::defaultfloat;
  if (!echo_path.empty())
    write_echo(echo_path, "predict",
               {{"checkpoint", ck_path}, {"skeleton", skeleton}, {"features", features},
                {"segment_streams", split_list(segment_streams)}});
  return kExitOk;
}

// ---------------------------------------------------------------- inspect

int cmd_inspect(const std::string& path, std::ostream& out) {
  const auto bytes = read_file(path);
  const auto head = as_text(bytes).substr(0, 4);
  if (head == "NRCK") {
    const auto ck = decode_checkpoint(bytes);
    const auto& c = ck.model.config();
    out << "checkpoint " << path << "\n  layout: " << describe_layout(ck.model.layout())
        << "\n  input_dim: " << c.input_dim << "\n  lstm_hidden: " << c.lstm_hidden
        << "\n  dense: " << c.dense1() << ", " << c.dense2() << "\n  classes: "
        << join(ck.model.class_names(), ", ") << "\n  epochs: " << ck.history.epochs.size()
        << " (best " << ck.history.best_epoch << ")\n";
  } else if (head == "NRFT") {
    ByteReader r(bytes);
    r.bytes(4);
    if (r.u32() == 2) {
      const auto chunk = decode_chunk(bytes);
      out << "chunk " << path << "\n  clip: " << chunk.clip_id << "\n  rows: " << chunk.length()
          << "\n  dim: " << chunk.dim() << "\n  layout: " << describe_layout(chunk.layout) << '\n';
      if (chunk.label) out << "  label: " << *chunk.label << '\n';
    } else {
      const auto s = load_feature_stream(bytes, fs::path(path).stem().string());
      out << "feature stream " << path << "\n  rows: " << s.length() << "\n  dim: " << s.dim() << '\n';
    }
  } else if (!head.empty() && head.front() == '{') {
    const auto m = parse_manifest(as_text(bytes), fs::path(path).parent_path());
    out << "manifest " << path << "\n  classes: " << join(m.class_names, ", ")
        << "\n  entries: " << m.entries.size() << '\n';
  } else {
    const auto seq = parse_skeleton(as_text(bytes), fs::path(path).stem().string());
    out << "skeleton " << path << "\n  clip: " << seq.clip_id << "\n  frames: " << seq.frames.size()
        << "\n  fps: " << seq.fps << "\n  duration: " << seq.duration_seconds() << " s\n";
    if (seq.label) out << "  label: " << *seq.label << '\n';
  }
  return kExitOk;
}

}  // namespace

FeatureChunk build_chunk(const DatasetManifest& manifest, const ManifestEntry& entry,
                         const ChunkOptions& options) {
  std::vector<FeatureStream> streams;
  for (const auto& name : options.streams) {
    const auto it = entry.features.find(name);
    if (it != entry.features.end()) {
      auto s = load_feature_file(manifest.resolve(it->second), name);
      const bool segmented = std::find(options.segment_streams.begin(), options.segment_streams.end(),
                                       name) != options.segment_streams.end();
      if (segmented && s.dim() == kKineticsSegmentFrames * kKineticsDim)
        s.rows = reshape_segment_features(s.rows);
      streams.push_back(std::move(s));
    } else if (name == "pose" && !entry.skeleton.empty()) {
      streams.push_back(pose_stream(load_skeleton_file(manifest.resolve(entry.skeleton)),
                                    options.sample_len));
    } else {
      throw InputError("clip '" + entry.clip_id + "' is missing required stream '" + name + "'");
    }
  }
  auto chunk = fuse(streams, options.sample_len);
  chunk.clip_id = entry.clip_id;
  chunk.label = entry.label;
  return chunk;
}

std::vector<FeatureChunk> build_chunks(const DatasetManifest& manifest,
                                       const ChunkOptions& options) {
  std::vector<FeatureChunk> out;
  for (const auto& e : manifest.entries) {
    try {
      out.push_back(build_chunk(manifest, e, options));
    } catch (const InputError&) {
      throw;
    } catch (const Error& ex) {
      throw InputError("feature stage, clip '" + e.clip_id + "': " + ex.what());
    }
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skeleton pose signatures and LSTM dance-form classification", "dancecls"};
  app.require_subcommand(1);

  SignatureArgs sig;
  auto* c_sig = app.add_subcommand("signature", "Skeleton files -> 48x75 pose-signature feature files");
  c_sig->add_option("inputs", sig.inputs, "Skeleton text files")->required();
  c_sig->add_option("-o,--out", sig.out_dir, "Output directory")->required();
  c_sig->add_option("--sample-len", sig.sample_len)->capture_default_str()->check(CLI::PositiveNumber);
  c_sig->add_option("-j,--jobs", sig.jobs, "Worker threads")->capture_default_str();

  std::string fuse_manifest, fuse_out;
  StreamFlags fuse_streams;
  auto* c_fuse = app.add_subcommand("fuse", "Manifest -> fused chunk cache files");
  c_fuse->add_option("-m,--manifest", fuse_manifest)->required();
  c_fuse->add_option("-o,--out", fuse_out, "Output directory")->required();
  fuse_streams.add_to(c_fuse);

  std::string split_manifest, split_train, split_test;
  double split_fraction = 0.7;
  std::uint64_t split_seed = 0;
  auto* c_split = app.add_subcommand("split", "Stratified train/test split of a manifest");
  c_split->add_option("-m,--manifest", split_manifest)->required();
  c_split->add_option("--train-fraction", split_fraction)->capture_default_str();
  c_split->add_option("--seed", split_seed)->capture_default_str();
  c_split->add_option("--out-train", split_train)->required();
  c_split->add_option("--out-test", split_test)->required();

  TrainArgs ta;
  auto* c_train = app.add_subcommand("train", "Split, fuse and train; writes a checkpoint");
  c_train->add_option("-m,--manifest", ta.manifest)->required();
  c_train->add_option("-o,--out", ta.out, "Checkpoint path")->capture_default_str();
  ta.streams.add_to(c_train);
  c_train->add_option("--seed", ta.seed)->capture_default_str();
  c_train->add_option("--hidden", ta.hidden, "LSTM width")->capture_default_str();
  c_train->add_option("--preset", ta.preset, "table (lr 1e-4) or protocol (lr 4e-4)")->capture_default_str();
  c_train->add_option("--lr", ta.lr, "Learning rate (overrides the preset)");
  c_train->add_option("--decay", ta.decay)->capture_default_str();
  c_train->add_option("--batch-size", ta.batch_size)->capture_default_str();
  c_train->add_option("--max-epochs", ta.max_epochs)->capture_default_str();
  c_train->add_option("--patience", ta.patience)->capture_default_str();
  c_train->add_option("--train-fraction", ta.train_fraction,
                      "Share of each class used for training; 1 trains on everything")
      ->capture_default_str();
  c_train->add_option("--val-fraction", ta.val_fraction, "Share of training clips held for validation")
      ->capture_default_str();
  c_train->add_option("--monitor", ta.monitor, "Early-stopping metric: loss or accuracy")->capture_default_str();
  c_train->add_option("--activation", ta.activation, "relu, tanh or linear")->capture_default_str();
  c_train->add_flag("--full-peephole", ta.full_peephole, "Use full-matrix peephole weights");

  std::vector<std::string> ev_checkpoints;
  std::string ev_manifest, ev_prefix = "eval", ev_segments = "kinetics";
  auto* c_eval = app.add_subcommand("evaluate", "Reports for one or more checkpoints on a manifest");
  c_eval->add_option("-c,--checkpoint", ev_checkpoints, "Repeat for a feature-combination table")->required();
  c_eval->add_option("-m,--manifest", ev_manifest)->required();
  c_eval->add_option("-o,--out-prefix", ev_prefix)->capture_default_str();
  c_eval->add_option("--segment-streams", ev_segments)->capture_default_str();

  std::string pr_checkpoint, pr_skeleton, pr_segments = "kinetics", pr_echo;
  std::vector<std::string> pr_features;
  auto* c_pred = app.add_subcommand("predict", "Classify one clip");
  c_pred->add_option("-c,--checkpoint", pr_checkpoint)->required();
  c_pred->add_option("-s,--skeleton", pr_skeleton);
  c_pred->add_option("-f,--feature", pr_features, "name=path, repeatable");
  c_pred->add_option("--segment-streams", pr_segments)->capture_default_str();
  c_pred->add_option("--config-echo", pr_echo, "Write effective settings here");

  std::string in_path;
  auto* c_inspect = app.add_subcommand("inspect", "Describe a skeleton, feature, chunk, manifest or checkpoint file");
  c_inspect->add_option("path", in_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*c_sig) return cmd_signature(sig, out, err);
    if (*c_fuse) return cmd_fuse(fuse_manifest, fuse_out, fuse_streams, out, err);
    if (*c_split) return cmd_split(split_manifest, split_fraction, split_seed, split_train, split_test, out);
    if (*c_train) return cmd_train(ta, out);
    if (*c_eval) return cmd_evaluate(ev_checkpoints, ev_manifest, ev_prefix, ev_segments, out);
    if (*c_pred) return cmd_predict(pr_checkpoint, pr_skeleton, pr_features, pr_segments, pr_echo, out);
    if (*c_inspect) return cmd_inspect(in_path, out);
  } catch (const TrainingError& e) {
    err << "training aborted: " << e.what() << '\n';
    return kExitTrainingAbort;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace dancecls
