#pragma once

#include "salclass/layers.hpp"
#include "salclass/saliency_net.hpp"

#include <cstdint>
#include <vector>

namespace salclass {

/// Saliency-conditioned conv classifier. The first conv sees 3 (RGB) or 4
/// (RGB + saliency) channels; later stages are conv3x3+ReLU+maxpool, then a
/// global average pool and the fully connected head.
struct ClassifierConfig {
  Index n_classes = 4;
  Index input_channels = 4;
  Index input_size = 64;
  Index first_kernels = 8;
  Index first_kernel_size = 3;
  Index first_stride = 1;
  bool pool_after_first = true;
  std::vector<Index> stage_widths = {16, 32};
  /// Width of an optional hidden FC layer; 0 means a single FC to the classes.
  Index fc_width = 0;

  static ClassifierConfig desk(Index n_classes, Index input_channels = 4);
  /// 32 first-layer 3x3 kernels at stride 2 on 299x299 input, 120 classes.
  static ClassifierConfig paper_shapes(Index n_classes = 120, Index input_channels = 4);

  void validate() const;
};

struct ClassifierOutput {
  Tensor logits;  // [N,n]
  Tensor probs;   // [N,n], rows sum to 1
};

struct ParameterGroups {
  std::vector<ParameterSlice> pretrained;
  std::vector<ParameterSlice> fresh;
};

/// Appends a saliency input channel to 3-channel first-layer kernels. RGB
/// weights are copied bit for bit; the new channel is N(0, init_scale^2).
Tensor extend_first_layer(const Tensor& kernels3, std::uint64_t seed, double init_scale);

/// Fan-in Gaussian scale for a freshly added saliency channel.
double default_saliency_init_scale(const Tensor& kernels3);

class Classifier {
 public:
  /// With input_channels == 4 the network is first built with 3 channels and
  /// then extended, so 3- and 4-channel builds from one seed share every
  /// RGB weight.
  Classifier(const ClassifierConfig& config, std::uint64_t seed);

  ClassifierOutput forward(const Tensor& input) const;

  /// 4-channel copy of a 3-channel classifier (deep copy of all weights).
  Classifier with_saliency_channel(std::uint64_t seed, double init_scale) const;
  Classifier clone() const;

  /// Declares the RGB weights as coming from a pretrained model; afterwards
  /// only the saliency-channel slice of the first layer counts as fresh.
  void mark_rgb_pretrained(bool flag = true) { rgb_pretrained_ = flag; }
  bool rgb_pretrained() const { return rgb_pretrained_; }

  std::vector<NamedParameter> parameters(const std::string& prefix = "classifier.") const;
  ParameterGroups parameter_groups(const std::string& prefix = "classifier.") const;

  const ClassifierConfig& config() const { return config_; }
  const Conv2dLayer& first_layer() const { return first_; }
  Conv2dLayer& first_layer() { return first_; }

 private:
  Classifier() = default;

  ClassifierConfig config_;
  Conv2dLayer first_;
  std::vector<Conv2dLayer> stages_;
  LinearLayer hidden_;
  LinearLayer head_;
  bool rgb_pretrained_ = false;
};

ClassifierOutput forward_classify(const Classifier& net, const Tensor& rgbs);
ParameterGroups parameter_groups(const Classifier& net);

}  // namespace salclass
