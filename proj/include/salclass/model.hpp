#pragma once

#include "salclass/classifier.hpp"
#include "salclass/saliency_net.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace salclass {

/// Flat named tensor value, the unit of checkpoints and snapshots.
struct TensorRecord {
  std::string name;
  Shape shape;
  Eigen::VectorXd values;

  bool operator==(const TensorRecord& other) const {
    return name == other.name && shape == other.shape && values.size() == other.values.size() &&
           values == other.values;
  }
};

struct ModelConfig {
  SaliencyNetConfig saliency = SaliencyNetConfig::desk();
  ClassifierConfig classifier = ClassifierConfig::desk(4, 4);
  double input_mean = 0.5;  // subtracted from every pixel before both subnetworks

  static ModelConfig desk(Index n_classes, Index classifier_channels = 4);
  static ModelConfig paper_shapes(Index n_classes = 120);
  /// "desk" or "paper-shapes".
  static ModelConfig preset(const std::string& name, Index n_classes, Index classifier_channels = 4);
};

/// Saliency detector -> batch-norm bridge -> RGBS classifier. With a
/// 3-channel classifier the bridge is bypassed and the classifier sees RGB
/// only; the saliency detector still produces maps for the saliency loss.
class SalClassNet {
 public:
  struct Output {
    Tensor coarse;   // [N,1,c,c]
    Tensor full;     // [N,1,S,S], the map Y of the saliency loss
    Tensor bridged;  // [N,1,S,S] normalized map fed to the classifier (4-channel only)
    Tensor logits;
    Tensor probs;
  };

  SalClassNet(const ModelConfig& config, std::uint64_t seed);

  Output forward(const Tensor& images, NormMode mode);

  /// Deep copy, including the pretrained markers.
  SalClassNet clone() const;
  /// 4-channel model from a 3-channel one: every weight and statistic is
  /// copied and the classifier gains a fresh saliency input channel.
  SalClassNet with_saliency_channel(std::uint64_t seed) const;

  bool uses_saliency_input() const { return classifier.config().input_channels == 4; }
  const ModelConfig& config() const { return config_; }

  std::vector<NamedParameter> parameters() const;
  /// Saliency detector and bridge parameters are fresh unless the detector
  /// is marked pretrained; classifier slices follow Classifier::parameter_groups.
  ParameterGroups parameter_groups() const;
  void mark_saliency_pretrained(bool flag = true) { saliency_pretrained_ = flag; }

  /// Parameters followed by bridge running statistics.
  std::vector<TensorRecord> state() const;
  /// Copies values by name into the existing tensors; names and shapes must match.
  void load_state(const std::vector<TensorRecord>& records);

  SaliencyNet saliency;
  BatchNorm2dLayer bridge;
  Classifier classifier;

 private:
  ModelConfig config_;
  bool saliency_pretrained_ = false;
};

}  // namespace salclass
