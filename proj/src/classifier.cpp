#include "salclass/classifier.hpp"

#include <cmath>
#include <string>

namespace salclass {

ClassifierConfig ClassifierConfig::desk(Index n_classes, Index input_channels) {
  ClassifierConfig c;
  c.n_classes = n_classes;
  c.input_channels = input_channels;
  return c;
}

ClassifierConfig ClassifierConfig::paper_shapes(Index n_classes, Index input_channels) {
  ClassifierConfig c;
  c.n_classes = n_classes;
  c.input_channels = input_channels;
  c.input_size = 299;
  c.first_kernels = 32;
  c.first_kernel_size = 3;
  c.first_stride = 2;
  c.pool_after_first = false;
  c.stage_widths = {32, 64};
  return c;
}

void ClassifierConfig::validate() const {
  if (input_channels != 3 && input_channels != 4) {
    throw ConfigError("classifier input_channels must be 3 or 4, got " + std::to_string(input_channels));
  }
  if (n_classes < 2) throw ConfigError("classifier needs at least 2 classes, got " + std::to_string(n_classes));
  if (first_kernels < 1 || first_kernel_size < 1 || first_stride < 1 || input_size < first_kernel_size) {
    throw ConfigError("classifier first layer settings are inconsistent");
  }
}

double default_saliency_init_scale(const Tensor& kernels3) {
  const Index fan_in = 4 * kernels3.dim(2) * kernels3.dim(3);
  return std::sqrt(2.0 / static_cast<double>(fan_in));
}

Tensor extend_first_layer(const Tensor& kernels3, std::uint64_t seed, double init_scale) {
  if (kernels3.rank() != 4 || kernels3.dim(1) != 3) {
    throw ContractError("extend_first_layer needs [K,3,kh,kw] kernels, got " + shape_to_string(kernels3.shape()));
  }
  if (init_scale < 0.0) throw ContractError("extend_first_layer: init_scale must be non-negative");
  const Index k = kernels3.dim(0), kh = kernels3.dim(2), kw = kernels3.dim(3);
  const Index area = kh * kw;
  Rng rng = make_rng(seed, "init-saliency-channel");
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd values(k * 4 * area);
  for (Index o = 0; o < k; ++o) {
    values.segment(o * 4 * area, 3 * area) = kernels3.values().segment(o * 3 * area, 3 * area);
    for (Index i = 0; i < area; ++i) values[o * 4 * area + 3 * area + i] = init_scale * dist(rng);
  }
  return Tensor({k, 4, kh, kw}, std::move(values), true);
}

Classifier::Classifier(const ClassifierConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng = make_rng(seed, "init-classifier");
  first_ = Conv2dLayer::he_init(3, config_.first_kernels, config_.first_kernel_size, config_.first_stride,
                                config_.first_stride == 1 ? config_.first_kernel_size / 2 : 0, rng);
  Index in = config_.first_kernels;
  for (Index width : config_.stage_widths) {
    stages_.push_back(Conv2dLayer::he_init(in, width, 3, 1, 1, rng));
    in = width;
  }
  if (config_.fc_width > 0) {
    hidden_ = LinearLayer::init(in, config_.fc_width, rng);
    in = config_.fc_width;
  }
  head_ = LinearLayer::init(in, config_.n_classes, rng);
  if (config_.input_channels == 4) {
    first_.weight = extend_first_layer(first_.weight, seed, default_saliency_init_scale(first_.weight));
  }
}

ClassifierOutput Classifier::forward(const Tensor& input) const {
  if (input.rank() != 4 || input.dim(1) != config_.input_channels) {
    throw ShapeError("classifier expects " + std::to_string(config_.input_channels) + " input channels, got " +
                     shape_to_string(input.shape()));
  }
  Tensor x = relu(first_(input));
  if (config_.pool_after_first) x = maxpool2d(x, 2, 2).output;
  for (const auto& conv : stages_) x = maxpool2d(relu(conv(x)), 2, 2).output;
  x = global_avg_pool(x);
  if (config_.fc_width > 0) x = relu(hidden_(x));
  Tensor logits = head_(x);
  Tensor probs = softmax(logits);
  return {std::move(logits), std::move(probs)};
}

Classifier Classifier::clone() const {
  Classifier copy;
  copy.config_ = config_;
  auto dup = [](const Conv2dLayer& l) { return Conv2dLayer{l.weight.clone(), l.bias.clone(), l.stride, l.padding}; };
  copy.first_ = dup(first_);
  for (const auto& s : stages_) copy.stages_.push_back(dup(s));
  if (config_.fc_width > 0) copy.hidden_ = {hidden_.weight.clone(), hidden_.bias.clone()};
  copy.head_ = {head_.weight.clone(), head_.bias.clone()};
  copy.rgb_pretrained_ = rgb_pretrained_;
  return copy;
}

Classifier Classifier::with_saliency_channel(std::uint64_t seed, double init_scale) const {
  if (config_.input_channels != 3) throw ContractError("classifier already has a saliency channel");
  Classifier out = clone();
  out.config_.input_channels = 4;
  out.first_.weight = extend_first_layer(first_.weight, seed, init_scale);
  return out;
}

std::vector<NamedParameter> Classifier::parameters(const std::string& prefix) const {
  std::vector<NamedParameter> params;
  params.push_back({prefix + "conv1.weight", first_.weight});
  params.push_back({prefix + "conv1.bias", first_.bias});
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const std::string base = prefix + "conv" + std::to_string(s + 2);
    params.push_back({base + ".weight", stages_[s].weight});
    params.push_back({base + ".bias", stages_[s].bias});
  }
  if (config_.fc_width > 0) {
    params.push_back({prefix + "hidden.weight", hidden_.weight});
    params.push_back({prefix + "hidden.bias", hidden_.bias});
  }
  params.push_back({prefix + "fc.weight", head_.weight});
  params.push_back({prefix + "fc.bias", head_.bias});
  return params;
}

ParameterGroups Classifier::parameter_groups(const std::string& prefix) const {
  ParameterGroups groups;
  for (const auto& p : parameters(prefix)) {
    ParameterSlice slice{p.name, p.tensor, {}, p.weight_decay};
    if (!rgb_pretrained_) {
      groups.fresh.push_back(std::move(slice));
      continue;
    }
    if (p.name == prefix + "conv1.weight" && config_.input_channels == 4) {
      // Saliency channel = channel 3 of every [4,kh,kw] kernel.
      const Index area = first_.weight.dim(2) * first_.weight.dim(3);
      ParameterSlice rgb{p.name, p.tensor, {}, p.weight_decay};
      ParameterSlice sal{p.name, p.tensor, {}, p.weight_decay};
      for (Index k = 0; k < first_.weight.dim(0); ++k) {
        rgb.ranges.emplace_back(k * 4 * area, k * 4 * area + 3 * area);
        sal.ranges.emplace_back(k * 4 * area + 3 * area, (k + 1) * 4 * area);
      }
      groups.pretrained.push_back(std::move(rgb));
      groups.fresh.push_back(std::move(sal));
      continue;
    }
    groups.pretrained.push_back(std::move(slice));
  }
  return groups;
}

ClassifierOutput forward_classify(const Classifier& net, const Tensor& rgbs) { return net.forward(rgbs); }

ParameterGroups parameter_groups(const Classifier& net) { return net.parameter_groups(); }

}  // namespace salclass
