#pragma once

#include "salclass/dataset.hpp"
#include "salclass/image.hpp"
#include "salclass/losses.hpp"
#include "salclass/model.hpp"

#include <string>
#include <vector>

namespace salclass::testing {

struct Batch {
  Tensor images;     // [N,3,S,S]
  Tensor heatmaps;   // [N,1,S,S]
  std::vector<int> labels;
};

/// In-memory synthetic samples with labels cycling through the classes.
inline Batch synth_batch(Index n, Index n_classes = 4, Index size = 64, std::uint64_t seed = 7) {
  SynthConfig config;
  config.n_classes = n_classes;
  config.image_size = size;
  config.seed = seed;
  std::vector<Image> images;
  std::vector<SaliencyMap> maps;
  Batch batch;
  for (Index i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % n_classes);
    Sample s = synth_sample(config, label, static_cast<std::uint64_t>(i));
    images.push_back(std::move(s.image));
    maps.push_back(std::move(s.heatmap));
    batch.labels.push_back(label);
  }
  batch.images = stack_images(images);
  batch.heatmaps = stack_maps(maps);
  return batch;
}

/// In-memory synthetic dataset, samples [first, first + n_classes * per_class).
inline Dataset synth_set(const SynthConfig& config, Index per_class, Index first = 0) {
  Dataset set;
  set.n_classes = config.n_classes;
  for (Index i = first; i < first + config.n_classes * per_class; ++i) {
    Sample s = synth_sample(config, static_cast<int>(i % config.n_classes), static_cast<std::uint64_t>(i));
    s.image_id = "img" + std::to_string(i);
    set.samples.push_back(std::move(s));
  }
  return set;
}

/// Training-mode multi-loss of the model on a batch.
inline LossTensors model_loss(SalClassNet& model, const Batch& batch, double alpha) {
  const auto out = model.forward(batch.images, NormMode::train);
  return multi_loss(out.probs, out.full, batch.labels, batch.heatmaps, alpha);
}

}  // namespace salclass::testing
