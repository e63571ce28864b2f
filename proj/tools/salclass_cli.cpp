#include "salclass/checkpoint.hpp"
#include "salclass/dataset.hpp"
#include "salclass/image_io.hpp"
#include "salclass/metrics.hpp"
#include "salclass/model.hpp"
#include "salclass/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace salclass;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value config file: keys without a section belong to the
// subcommand being run.
class FlatConfig : public CLI::ConfigINI {
 public:
  explicit FlatConfig(const CLI::App* app) : app_(app) {}
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    const auto subs = app_->get_subcommands();
    if (subs.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty()) item.parents.push_back(subs.front()->get_name());
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

struct Options {
  // synth
  Index classes = 4;
  Index per_class = 32;
  Index size = 64;
  // shared
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  std::string preset = "desk";
  std::string split = "test";
  std::string checkpoint;
  std::optional<double> sigma_px;
  int sauc_splits = 100;
  // train
  std::optional<double> alpha, lr, lr_fresh, momentum, weight_decay;
  std::optional<Index> batch_size;
  std::optional<int> patience, max_epochs;
  std::string resume;
  Index channels = 4;
  std::string selection = "mca";
  // export-maps
  std::string format = "pgm";
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_config(const std::string& command, const std::vector<std::pair<std::string, std::string>>& entries) {
  std::cout << "# effective configuration (" << command << ")\n";
  for (const auto& [k, v] : entries) std::cout << k << '=' << v << '\n';
  std::cout.flush();
}

TrainConfig preset_train_config(const std::string& preset) {
  if (preset == "desk") return TrainConfig::desk();
  if (preset == "paper-shapes") return TrainConfig::paper();
  throw UsageError("unknown preset '" + preset + "' (expected desk or paper-shapes)");
}

HeatmapOptions heatmap_options(const Options& o) {
  HeatmapOptions h;
  if (o.sigma_px) h.sigma_px = *o.sigma_px;
  return h;
}

Manifest require_manifest(const Options& o) {
  if (o.manifest.empty()) throw UsageError("--manifest is required");
  Manifest m = load_manifest(o.manifest);
  m.validate();
  return m;
}

fs::path require_out(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

// Rebuilds the model a checkpoint was written from.
SalClassNet load_model(const Options& o, Index n_classes) {
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  if (!fs::exists(o.checkpoint)) throw UsageError("checkpoint not found: " + o.checkpoint);
  const Checkpoint ckpt = read_checkpoint(o.checkpoint);
  const TensorRecord& first = find_record(ckpt, "classifier.conv1.weight");
  if (first.shape.size() != 4) throw CheckpointError("classifier.conv1.weight is not a conv kernel");
  const Index channels = first.shape[1];
  SalClassNet model(ModelConfig::preset(o.preset, n_classes, channels), 0);
  model.load_state(ckpt.model);
  return model;
}

int cmd_synth(const Options& o) {
  const fs::path out = require_out(o);
  SynthConfig config;
  config.n_classes = o.classes;
  config.n_per_class = o.per_class;
  config.image_size = o.size;
  config.seed = o.seed;
  if (config.n_classes < 2) throw UsageError("--classes must be at least 2");
  print_config("synth", {{"classes", std::to_string(o.classes)},
                         {"per-class", std::to_string(o.per_class)},
                         {"size", std::to_string(o.size)},
                         {"seed", std::to_string(o.seed)},
                         {"out", o.out}});
  const Manifest m = synth_dataset(config, out);
  std::cout << "wrote " << m.total() << " samples (" << m.train.size() << " train, " << m.val.size() << " val, "
            << m.test.size() << " test) to " << (out / "manifest.tsv").string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o) {
  const Manifest manifest = require_manifest(o);
  const fs::path out = require_out(o);
  TrainConfig config = preset_train_config(o.preset);
  if (o.alpha) config.alpha = *o.alpha;
  if (o.lr) config.lr = *o.lr;
  if (o.lr_fresh) config.lr_fresh = *o.lr_fresh;
  if (o.momentum) config.momentum = *o.momentum;
  if (o.weight_decay) config.weight_decay = *o.weight_decay;
  if (o.batch_size) config.batch_size = *o.batch_size;
  if (o.patience) config.patience_epochs = *o.patience;
  if (o.max_epochs) config.max_epochs = *o.max_epochs;
  config.seed = o.seed;
  if (o.selection == "mca") {
    config.selection = Selection::classification;
  } else if (o.selection == "mse") {
    config.selection = Selection::saliency;
  } else {
    throw UsageError("--selection must be mca or mse");
  }
  if (o.channels != 3 && o.channels != 4) throw UsageError("--channels must be 3 or 4");
  config.validate();

  print_config("train", {{"manifest", o.manifest},
                         {"out", o.out},
                         {"preset", o.preset},
                         {"seed", std::to_string(o.seed)},
                         {"channels", std::to_string(o.channels)},
                         {"alpha", fmt(config.alpha)},
                         {"lr", fmt(config.lr)},
                         {"lr-fresh", fmt(config.fresh_lr())},
                         {"momentum", fmt(config.momentum)},
                         {"weight-decay", fmt(config.weight_decay)},
                         {"batch-size", std::to_string(config.batch_size)},
                         {"patience", std::to_string(config.patience_epochs)},
                         {"max-epochs", std::to_string(config.max_epochs)},
                         {"selection", o.selection},
                         {"sigma-px", o.sigma_px ? fmt(*o.sigma_px) : "auto"},
                         {"resume", o.resume}});

  LoadReport report;
  const Dataset train_set = load_split(manifest, Split::train, heatmap_options(o), &report);
  const Dataset val_set = load_split(manifest, Split::val, heatmap_options(o));
  if (report.rejected_fixations > 0) {
    std::cerr << "warning: " << report.rejected_fixations << " out-of-bounds fixations rejected\n";
  }
  const auto n_classes = static_cast<Index>(manifest.classes.size());
  SalClassNet model(ModelConfig::preset(o.preset, n_classes, o.channels), o.seed);
  TrainState state;
  if (!o.resume.empty()) {
    if (!fs::exists(o.resume)) throw UsageError("checkpoint not found: " + o.resume);
    Checkpoint ckpt = read_checkpoint(o.resume);
    model.load_state(ckpt.model);
    state = std::move(ckpt.state);
    std::cout << "resuming after epoch " << state.epoch << '\n';
  }

  TrainLog log(out / "train_log.csv");
  const fs::path last = out / "last.ckpt";
  state = train(model, train_set, val_set, config, std::move(state),
                [&](const TrainState& s, const EpochRecord& r, const SalClassNet& m) {
                  write_checkpoint(last, make_checkpoint(m, s));
                  log.append(r);
                  std::printf("epoch %d iter %lld loss %.6f (class %.6f, sal %.6f) val_mca %.4f val_mse %.6f\n",
                              r.epoch, static_cast<long long>(r.iteration), r.loss_total, r.loss_class, r.loss_sal,
                              r.val_mca, r.val_mse);
                  std::fflush(stdout);
                });
  write_checkpoint(out / "best.ckpt", best_checkpoint(state));
  if (state.history.empty()) {
    std::cout << "no epochs run\n";
    return kExitOk;
  }
  const EpochRecord& final_row = state.history.back();
  std::printf("selected epoch %d (val_mca %.4f)\n", state.selected_epoch, state.best_val_mca);
  std::printf("final val_mca %.4f val_mse %.6f\n", final_row.val_mca, final_row.val_mse);
  return kExitOk;
}

Split chosen_split(const Options& o) {
  try {
    return parse_split(o.split);
  } catch (const ManifestError&) {
    throw UsageError("--split must be train, val or test");
  }
}

int cmd_eval(const Options& o) {
  const Manifest manifest = require_manifest(o);
  const fs::path out = require_out(o);
  const Split split = chosen_split(o);
  print_config("eval", {{"manifest", o.manifest},
                        {"checkpoint", o.checkpoint},
                        {"out", o.out},
                        {"preset", o.preset},
                        {"split", o.split},
                        {"seed", std::to_string(o.seed)},
                        {"sauc-splits", std::to_string(o.sauc_splits)},
                        {"sigma-px", o.sigma_px ? fmt(*o.sigma_px) : "auto"}});
  SalClassNet model = load_model(o, static_cast<Index>(manifest.classes.size()));
  const Dataset data = load_split(manifest, split, heatmap_options(o));
  const AugmentConfig augment = preset_train_config(o.preset).augment;
  const auto preds = predict(model, data, augment);
  std::vector<MapPair> pairs;
  std::vector<int> predicted, labels;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pairs.push_back({preds[i].image_id, preds[i].map, preds[i].truth, preds[i].fixations});
    predicted.push_back(preds[i].predicted_class);
    labels.push_back(data.samples[i].label);
  }
  const MetricReport report = evaluate_maps(pairs, {o.sauc_splits, o.seed});
  const auto mca = mean_class_accuracy(predicted, labels, data.n_classes);
  write_metric_csv(out / "metrics.csv", report);
  auto summary = nlohmann::json::parse(metric_summary_json(report));
  summary["mca"] = mca.mca;
  std::ofstream(out / "metrics.json", std::ios::binary) << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_export_maps(const Options& o) {
  const Manifest manifest = require_manifest(o);
  const fs::path out = require_out(o);
  const Split split = chosen_split(o);
  if (o.format != "pgm" && o.format != "png") throw UsageError("--format must be pgm or png");
  print_config("export-maps", {{"manifest", o.manifest},
                               {"checkpoint", o.checkpoint},
                               {"out", o.out},
                               {"preset", o.preset},
                               {"split", o.split},
                               {"format", o.format},
                               {"sigma-px", o.sigma_px ? fmt(*o.sigma_px) : "auto"}});
  SalClassNet model = load_model(o, static_cast<Index>(manifest.classes.size()));
  const Dataset data = load_split(manifest, split, heatmap_options(o));
  const auto preds = predict(model, data, preset_train_config(o.preset).augment);
  for (const auto& p : preds) {
    export_map(out / (p.image_id + "_pred." + o.format), p.map);
    export_map(out / (p.image_id + "_gt." + o.format), p.truth);
  }
  std::cout << "exported " << preds.size() << " map pairs to " << out.string() << '\n';
  return kExitOk;
}

int cmd_human_baseline(const Options& o) {
  const Manifest manifest = require_manifest(o);
  const fs::path out = require_out(o);
  const Split split = chosen_split(o);
  print_config("human-baseline", {{"manifest", o.manifest},
                                  {"out", o.out},
                                  {"split", o.split},
                                  {"seed", std::to_string(o.seed)},
                                  {"sauc-splits", std::to_string(o.sauc_splits)},
                                  {"sigma-px", o.sigma_px ? fmt(*o.sigma_px) : "auto"}});
  const Dataset data = load_split(manifest, split, heatmap_options(o));
  const MetricReport report = human_baseline(data, {o.sauc_splits, o.seed});
  write_metric_csv(out / "metrics.csv", report);
  write_metric_json(out / "metrics.json", report);
  std::cout << metric_summary_json(report) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-down saliency and saliency-conditioned classification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");
  app.config_formatter(std::make_shared<FlatConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  Options o;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
  synth->add_option("--classes", o.classes, "Number of classes")->capture_default_str();
  synth->add_option("--per-class", o.per_class, "Images per class")->capture_default_str();
  synth->add_option("--size", o.size, "Image side in pixels")->capture_default_str();
  synth->add_option("--seed", o.seed, "Root seed");
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the joint model");
  train_cmd->add_option("--manifest", o.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out", o.out, "Run directory (checkpoints and log)")->required();
  train_cmd->add_option("--seed", o.seed, "Root seed")->capture_default_str();
  train_cmd->add_option("--alpha", o.alpha, "Classification loss weight");
  train_cmd->add_option("--lr", o.lr, "Base learning rate (pretrained group)");
  train_cmd->add_option("--lr-fresh", o.lr_fresh, "Learning rate of freshly initialized weights");
  train_cmd->add_option("--momentum", o.momentum, "SGD momentum");
  train_cmd->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
  train_cmd->add_option("--batch-size", o.batch_size, "Mini-batch size");
  train_cmd->add_option("--patience", o.patience, "Early-stopping patience in epochs");
  train_cmd->add_option("--max-epochs", o.max_epochs, "Epoch limit");
  train_cmd->add_option("--preset", o.preset, "desk or paper-shapes")->capture_default_str();
  train_cmd->add_option("--resume", o.resume, "Checkpoint to resume from");
  train_cmd->add_option("--sigma-px", o.sigma_px, "Heatmap Gaussian sigma in pixels");
  train_cmd->add_option("--channels", o.channels, "Classifier input channels (3 or 4)")->capture_default_str();
  train_cmd->add_option("--selection", o.selection, "Model selection metric: mca or mse")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Score predicted maps of a checkpoint");
  auto* export_cmd = app.add_subcommand("export-maps", "Write predicted and ground-truth maps");
  for (auto* cmd : {eval_cmd, export_cmd}) {
    cmd->add_option("--manifest", o.manifest, "Dataset manifest")->required();
    cmd->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_option("--preset", o.preset, "desk or paper-shapes")->capture_default_str();
    cmd->add_option("--split", o.split, "train, val or test")->capture_default_str();
    cmd->add_option("--sigma-px", o.sigma_px, "Heatmap Gaussian sigma in pixels");
  }
  eval_cmd->add_option("--seed", o.seed, "Seed of the s-AUC negative draws")->capture_default_str();
  eval_cmd->add_option("--sauc-splits", o.sauc_splits, "s-AUC negative draws")->capture_default_str();
  export_cmd->add_option("--format", o.format, "pgm or png")->capture_default_str();

  auto* human = app.add_subcommand("human-baseline", "Score ground-truth maps against their own fixations");
  human->add_option("--manifest", o.manifest, "Dataset manifest")->required();
  human->add_option("--out", o.out, "Output directory")->required();
  human->add_option("--split", o.split, "train, val or test")->capture_default_str();
  human->add_option("--seed", o.seed, "Seed of the s-AUC negative draws")->capture_default_str();
  human->add_option("--sauc-splits", o.sauc_splits, "s-AUC negative draws")->capture_default_str();
  human->add_option("--sigma-px", o.sigma_px, "Heatmap Gaussian sigma in pixels");

  // The synthetic generator has its own default root seed.
  o.seed = 0;
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (synth->parsed() && synth->count("--seed") == 0) o.seed = SynthConfig{}.seed;

  try {
    if (synth->parsed()) return cmd_synth(o);
    if (train_cmd->parsed()) return cmd_train(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (export_cmd->parsed()) return cmd_export_maps(o);
    if (human->parsed()) return cmd_human_baseline(o);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
