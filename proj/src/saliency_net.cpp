#include "salclass/saliency_net.hpp"

#include <string>

namespace salclass {

SaliencyNetConfig SaliencyNetConfig::desk() {
  SaliencyNetConfig c;
  c.stage_channels = {16, 32, 64};
  c.convs_per_stage = {1, 1, 1};
  c.input_size = 64;
  c.coarse_size = 8;
  return c;
}

SaliencyNetConfig SaliencyNetConfig::paper_shapes() {
  SaliencyNetConfig c;
  c.stage_channels = {64, 128, 256, 512, 512};
  c.convs_per_stage = {2, 2, 3, 3, 3};
  c.input_size = 299;
  c.coarse_size = 10;
  c.ceil_mode_pooling = true;  // 299 -> 150 -> 75 -> 38 -> 19 -> 10
  return c;
}

std::vector<Index> SaliencyNetConfig::stage_extents() const {
  std::vector<Index> extents;
  Index extent = input_size;
  for (std::size_t s = 0; s < stage_channels.size(); ++s) {
    if (extent < 2) {
      throw ConfigError("saliency stage " + std::to_string(s + 1) + " receives a " + std::to_string(extent) +
                        "x" + std::to_string(extent) + " map, too small for 2x2 pooling");
    }
    extent = pooled_extent(extent, 2, 2, ceil_mode_pooling);
    extents.push_back(extent);
  }
  return extents;
}

void SaliencyNetConfig::validate() const {
  if (stage_channels.empty()) throw ConfigError("saliency net needs at least one stage");
  if (convs_per_stage.size() != stage_channels.size()) {
    throw ConfigError("saliency net: " + std::to_string(convs_per_stage.size()) + " conv counts for " +
                      std::to_string(stage_channels.size()) + " pooling stages");
  }
  for (std::size_t s = 0; s < stage_channels.size(); ++s) {
    if (stage_channels[s] < 1 || convs_per_stage[s] < 1) {
      throw ConfigError("saliency stage " + std::to_string(s + 1) + " needs positive width and conv count");
    }
  }
  if (input_size < 1 || coarse_size < 1) throw ConfigError("saliency net sizes must be positive");
  const auto extents = stage_extents();
  if (extents.back() != coarse_size) {
    throw ConfigError("saliency stage " + std::to_string(extents.size()) + " pools to " +
                      std::to_string(extents.back()) + "x" + std::to_string(extents.back()) +
                      ", expected coarse_size " + std::to_string(coarse_size));
  }
}

SaliencyNet::SaliencyNet(const SaliencyNetConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng = make_rng(seed, "init-saliency");
  Index in = 3;
  for (std::size_t s = 0; s < config_.stage_channels.size(); ++s) {
    std::vector<Conv2dLayer> stage;
    for (Index k = 0; k < config_.convs_per_stage[s]; ++k) {
      stage.push_back(Conv2dLayer::he_init(in, config_.stage_channels[s], 3, 1, 1, rng));
      in = config_.stage_channels[s];
    }
    stages_.push_back(std::move(stage));
  }
  score_ = Conv2dLayer::he_init(in, 1, 1, 1, 0, rng);
}

Tensor SaliencyNet::features(const Tensor& images) const {
  if (images.rank() != 4 || images.dim(1) != 3 || images.dim(2) != config_.input_size ||
      images.dim(3) != config_.input_size) {
    throw ShapeError("saliency net expects [N,3," + std::to_string(config_.input_size) + "," +
                     std::to_string(config_.input_size) + "], got " + shape_to_string(images.shape()));
  }
  Tensor x = images;
  for (const auto& stage : stages_) {
    for (const auto& conv : stage) x = relu(conv(x));
    x = maxpool2d(x, 2, 2, config_.ceil_mode_pooling).output;
  }
  return x;
}

SaliencyNet::Output SaliencyNet::forward(const Tensor& images) const {
  Tensor coarse = score_(features(images));
  Tensor full = bilinear_upsample(coarse, config_.input_size, config_.input_size);
  return {std::move(coarse), std::move(full)};
}

std::vector<NamedParameter> SaliencyNet::parameters(const std::string& prefix) const {
  std::vector<NamedParameter> params;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (std::size_t k = 0; k < stages_[s].size(); ++k) {
      const std::string base = prefix + "conv" + std::to_string(s + 1) + "_" + std::to_string(k + 1);
      params.push_back({base + ".weight", stages_[s][k].weight});
      params.push_back({base + ".bias", stages_[s][k].bias});
    }
  }
  params.push_back({prefix + "score.weight", score_.weight});
  params.push_back({prefix + "score.bias", score_.bias});
  return params;
}

SaliencyNet build_saliency_net(const SaliencyNetConfig& config, std::uint64_t seed) {
  return SaliencyNet(config, seed);
}

SaliencyNet::Output forward_saliency(const SaliencyNet& net, const Tensor& images) { return net.forward(images); }

}  // namespace salclass
