#pragma once

#include "salclass/image.hpp"
#include "salclass/layers.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace salclass {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Conv/pool feature stack settings. Every stage is `convs_per_stage[s]`
/// 3x3 same-padded conv+ReLU layers followed by a 2x2/2 max pool.
struct SaliencyNetConfig {
  std::vector<Index> stage_channels;
  std::vector<Index> convs_per_stage;
  Index input_size = 64;
  Index coarse_size = 8;
  bool ceil_mode_pooling = false;

  /// Three single-conv stages, widths 16/32/64, 64x64 input, 8x8 coarse map.
  static SaliencyNetConfig desk();
  /// VGG-style 13 convs / 5 pools, 299x299 input, 512x10x10 final features.
  static SaliencyNetConfig paper_shapes();

  /// Spatial extent after every pooling stage.
  std::vector<Index> stage_extents() const;
  /// Throws ConfigError naming the offending stage.
  void validate() const;
};

/// Top-down saliency detector: feature stack, 1x1 scoring conv producing a
/// single-channel coarse map, align-corners bilinear upsampling back to the
/// input size. The score is left unsquashed.
class SaliencyNet {
 public:
  struct Output {
    Tensor coarse;  // [N,1,c,c]
    Tensor full;    // [N,1,S,S]
  };

  SaliencyNet(const SaliencyNetConfig& config, std::uint64_t seed);

  Output forward(const Tensor& images) const;
  /// Feature block fed to the scoring conv, [N, last width, c, c].
  Tensor features(const Tensor& images) const;

  std::vector<NamedParameter> parameters(const std::string& prefix = "saliency.") const;
  const SaliencyNetConfig& config() const { return config_; }

 private:
  SaliencyNetConfig config_;
  std::vector<std::vector<Conv2dLayer>> stages_;
  Conv2dLayer score_;
};

SaliencyNet build_saliency_net(const SaliencyNetConfig& config, std::uint64_t seed);
SaliencyNet::Output forward_saliency(const SaliencyNet& net, const Tensor& images);

}  // namespace salclass
