#include "salclass/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numeric>

namespace salclass {

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.alpha = 0.2;
  c.lr = 0.001;
  c.momentum = 0.9;
  c.weight_decay = 0.0005;
  c.batch_size = 16;
  c.decay_constant = kLrDecayConstant;
  c.patience_epochs = 10;
  c.max_epochs = 120;
  c.augment = AugmentConfig{};
  return c;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c = paper();
  c.lr = 0.05;
  c.max_epochs = 80;
  c.patience_epochs = 20;
  c.augment = AugmentConfig::desk();
  return c;
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw ContractError("alpha must be non-negative");
  if (patience_epochs < 1) throw ContractError("patience_epochs must be at least 1");
  if (batch_size < 1) throw ContractError("batch_size must be at least 1");
  if (max_epochs < 0) throw ContractError("max_epochs must be non-negative");
  if (!(lr > 0.0) || !(fresh_lr() > 0.0)) throw ContractError("learning rates must be positive");
  if (momentum < 0.0 || weight_decay < 0.0) throw ContractError("momentum and weight decay must be non-negative");
  augment.validate();
}

namespace {

Tensor loss_target(const SalClassNet::Output& out, const Tensor& truth, LossResolution resolution,
                   Tensor& predicted) {
  if (resolution == LossResolution::full) {
    predicted = out.full;
    return truth;
  }
  predicted = out.coarse;
  NoGradGuard guard;
  return bilinear_upsample(truth, out.coarse.dim(2), out.coarse.dim(3));
}

std::vector<GroupStep> group_steps(const SalClassNet& model, const TrainConfig& config, std::int64_t iteration) {
  auto groups = model.parameter_groups();
  std::vector<GroupStep> steps;
  steps.push_back({std::move(groups.pretrained), lr_at(config.lr, iteration, config.decay_constant)});
  steps.push_back({std::move(groups.fresh), lr_at(config.fresh_lr(), iteration, config.decay_constant)});
  return steps;
}

}  // namespace

EpochLosses train_epoch(SalClassNet& model, const Dataset& dataset, const TrainConfig& config, TrainState& state) {
  config.validate();
  if (dataset.empty()) throw ContractError("train_epoch: empty training set");
  const auto epoch = static_cast<std::uint64_t>(state.epoch);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = make_rng(config.seed, "shuffle", epoch);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  Rng augment_rng = make_rng(config.seed, "augment", epoch);

  const auto params = model.parameters();
  EpochLosses sums;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += batch, ++batch_index) {
    const std::size_t end = std::min(order.size(), start + batch);
    std::vector<Image> images;
    std::vector<SaliencyMap> maps;
    std::vector<int> labels;
    for (std::size_t k = start; k < end; ++k) {
      const Sample& s = dataset.samples[order[k]];
      auto geometries = sample_crop_geometries(s.image.height(), s.image.width(), config.augment, augment_rng);
      std::uniform_int_distribution<std::size_t> pick(0, geometries.size() - 1);
      auto crop = apply_geometry(s.image, s.heatmap, geometries[pick(augment_rng)]);
      images.push_back(std::move(crop.image));
      maps.push_back(std::move(crop.heatmap));
      labels.push_back(s.label);
    }
    zero_grad(params);
    const auto out = model.forward(stack_images(images), NormMode::train);
    Tensor predicted;
    const Tensor truth = loss_target(out, stack_maps(maps), config.loss_resolution, predicted);
    const auto losses = multi_loss(out.probs, predicted, labels, truth, config.alpha);
    const double total = losses.total.item();
    if (!std::isfinite(total)) {
      throw NumericalError("non-finite loss " + std::to_string(total) + " at epoch " + std::to_string(state.epoch) +
                           ", batch " + std::to_string(batch_index) + ", iteration " +
                           std::to_string(state.iteration));
    }
    backward(losses.total);
    const auto steps = group_steps(model, config, state.iteration);
    sgd_step(steps, state.momentum, config.momentum, config.weight_decay);
    ++state.iteration;

    const auto n = static_cast<double>(end - start);
    sums.total += n * total;
    sums.classification += n * losses.classification.item();
    sums.saliency += n * losses.saliency.item();
  }
  const auto n = static_cast<double>(order.size());
  return {sums.total / n, sums.classification / n, sums.saliency / n};
}

std::vector<Prediction> predict(SalClassNet& model, const Dataset& dataset, const AugmentConfig& augment,
                                Index batch_size) {
  NoGradGuard guard;
  std::vector<Prediction> out;
  const auto batch = static_cast<std::size_t>(std::max<Index>(1, batch_size));
  for (std::size_t start = 0; start < dataset.size(); start += batch) {
    const std::size_t end = std::min(dataset.size(), start + batch);
    std::vector<Image> images;
    std::vector<Prediction> preds;
    for (std::size_t k = start; k < end; ++k) {
      const Sample& s = dataset.samples[k];
      auto crop = center_crop(s.image, s.heatmap, augment);
      images.push_back(std::move(crop.image));
      Prediction p;
      p.image_id = s.image_id;
      p.truth = std::move(crop.heatmap);
      p.fixations = transform_fixations(s.fixations, crop.geometry);
      preds.push_back(std::move(p));
    }
    const auto result = model.forward(stack_images(images), NormMode::eval);
    const Index classes = result.probs.dim(1);
    for (std::size_t k = 0; k < preds.size(); ++k) {
      const auto row = static_cast<Index>(k);
      Eigen::Map<const Eigen::VectorXd> probs(result.probs.data() + row * classes, classes);
      Index best = 0;
      probs.maxCoeff(&best);
      preds[k].predicted_class = static_cast<int>(best);
      preds[k].map = plane_from_tensor(result.full, row);
      out.push_back(std::move(preds[k]));
    }
  }
  return out;
}

ClassificationReport mean_class_accuracy(std::span<const int> predicted, std::span<const int> labels,
                                         Index n_classes) {
  if (predicted.size() != labels.size()) throw ContractError("mean_class_accuracy: length mismatch");
  std::vector<double> hits(static_cast<std::size_t>(n_classes), 0.0), counts(static_cast<std::size_t>(n_classes), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw ContractError("mean_class_accuracy: label out of range");
    const auto c = static_cast<std::size_t>(labels[i]);
    counts[c] += 1.0;
    if (predicted[i] == labels[i]) hits[c] += 1.0;
  }
  ClassificationReport report;
  double acc = 0.0;
  int used = 0;
  for (Index c = 0; c < n_classes; ++c) {
    const auto k = static_cast<std::size_t>(c);
    if (counts[k] == 0.0) {
      report.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      report.empty_classes.push_back(static_cast<int>(c));
      continue;
    }
    report.per_class.push_back(hits[k] / counts[k]);
    acc += hits[k] / counts[k];
    ++used;
  }
  report.mca = used ? acc / used : 0.0;
  return report;
}

double evaluate_classification(SalClassNet& model, const Dataset& dataset, const AugmentConfig& augment,
                               Index batch_size) {
  const auto preds = predict(model, dataset, augment, batch_size);
  std::vector<int> predicted, labels;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    predicted.push_back(preds[i].predicted_class);
    labels.push_back(dataset.samples[i].label);
  }
  const auto report = mean_class_accuracy(predicted, labels, dataset.n_classes);
  for (int c : report.empty_classes) {
    std::cerr << "warning: class " << c << " has no samples; excluded from mean class accuracy\n";
  }
  return report.mca;
}

ValidationMetrics evaluate(SalClassNet& model, const Dataset& dataset, const TrainConfig& config) {
  if (dataset.empty()) throw ContractError("evaluate: empty validation set");
  const auto preds = predict(model, dataset, config.augment, config.batch_size);
  std::vector<int> predicted, labels;
  double mse_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    predicted.push_back(preds[i].predicted_class);
    labels.push_back(dataset.samples[i].label);
    mse_sum += mse_saliency(preds[i].map, preds[i].truth);
  }
  return {mean_class_accuracy(predicted, labels, dataset.n_classes).mca, mse_sum / static_cast<double>(preds.size())};
}

TrainState train(SalClassNet& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                 TrainState state, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty() || val_set.empty()) throw ContractError("train: datasets must be non-empty");
  for (const auto& a : train_set.samples) {
    for (const auto& b : val_set.samples) {
      if (a.image_id == b.image_id) throw ContractError("train: image " + a.image_id + " is in both train and val");
    }
  }
  while (state.epoch < config.max_epochs && !state.stagnant(config.patience_epochs)) {
    const EpochLosses losses = train_epoch(model, train_set, config, state);
    const ValidationMetrics val = evaluate(model, val_set, config);
    ++state.epoch;

    const bool mca_better = val.mca > state.best_val_mca + config.stagnation_tolerance;
    const bool mse_better = val.mse < state.best_val_mse - config.stagnation_tolerance;
    if (mca_better) {
      state.best_val_mca = val.mca;
      state.best_mca_epoch = state.epoch;
      state.epochs_since_mca_improvement = 0;
    } else {
      ++state.epochs_since_mca_improvement;
    }
    if (mse_better) {
      state.best_val_mse = val.mse;
      state.best_mse_epoch = state.epoch;
      state.epochs_since_mse_improvement = 0;
    } else {
      ++state.epochs_since_mse_improvement;
    }
    const bool select = config.selection == Selection::classification ? mca_better : mse_better;
    if (select || state.best_snapshot.empty()) {
      state.best_snapshot = model.state();
      state.selected_epoch = state.epoch;
    }

    EpochRecord record{state.epoch,  state.iteration,     lr_at(config.lr, state.iteration, config.decay_constant),
                       losses.total, losses.classification, losses.saliency,
                       val.mca,      val.mse};
    state.history.push_back(record);
    if (on_epoch) on_epoch(state, record, model);
  }
  return state;
}

TrainLog::TrainLog(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0) return;
  std::ofstream out(path_, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create training log " + path_.string());
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[64];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  out << "# salclass training log, started " << stamp << '\n' << kHeader << '\n';
}

void TrainLog::append(const EpochRecord& r) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot append to training log " + path_.string());
  char line[512];
  std::snprintf(line, sizeof line, "%d,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                static_cast<long long>(r.iteration), r.lr, r.loss_total, r.loss_class, r.loss_sal, r.val_mca,
                r.val_mse);
  out << line;
}

}  // namespace salclass
