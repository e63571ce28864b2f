#include "salclass/model.hpp"

#include <map>

namespace salclass {

ModelConfig ModelConfig::desk(Index n_classes, Index classifier_channels) {
  ModelConfig c;
  c.saliency = SaliencyNetConfig::desk();
  c.classifier = ClassifierConfig::desk(n_classes, classifier_channels);
  c.classifier.input_size = c.saliency.input_size;
  return c;
}

ModelConfig ModelConfig::paper_shapes(Index n_classes) {
  ModelConfig c;
  c.saliency = SaliencyNetConfig::paper_shapes();
  c.classifier = ClassifierConfig::paper_shapes(n_classes, 4);
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name, Index n_classes, Index classifier_channels) {
  if (name == "desk") return desk(n_classes, classifier_channels);
  if (name == "paper-shapes") {
    ModelConfig c = paper_shapes(n_classes);
    c.classifier.input_channels = classifier_channels;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper-shapes)");
}

SalClassNet::SalClassNet(const ModelConfig& config, std::uint64_t seed)
    : saliency(config.saliency, seed), bridge(1), classifier(config.classifier, seed), config_(config) {
  if (config.classifier.input_size != config.saliency.input_size) {
    throw ConfigError("classifier input size must match the saliency detector input size");
  }
}

SalClassNet::Output SalClassNet::forward(const Tensor& raw_images, NormMode mode) {
  const Tensor images =
      config_.input_mean == 0.0 ? raw_images : add(raw_images, Tensor::full(raw_images.shape(), -config_.input_mean));
  Output out;
  auto maps = saliency.forward(images);
  out.coarse = std::move(maps.coarse);
  out.full = std::move(maps.full);
  ClassifierOutput cls;
  if (uses_saliency_input()) {
    out.bridged = bridge(out.full, mode);
    cls = classifier.forward(concat_channels(images, out.bridged));
  } else {
    cls = classifier.forward(images);
  }
  out.logits = std::move(cls.logits);
  out.probs = std::move(cls.probs);
  return out;
}

std::vector<NamedParameter> SalClassNet::parameters() const {
  auto params = saliency.parameters();
  params.push_back({"bridge.gamma", bridge.gamma, false});
  params.push_back({"bridge.beta", bridge.beta, false});
  for (auto& p : classifier.parameters()) params.push_back(std::move(p));
  return params;
}

ParameterGroups SalClassNet::parameter_groups() const {
  ParameterGroups groups;
  for (const auto& p : saliency.parameters()) {
    const bool score = p.name.find(".score.") != std::string::npos;
    auto& dst = (saliency_pretrained_ && !score) ? groups.pretrained : groups.fresh;
    dst.push_back({p.name, p.tensor, {}, p.weight_decay});
  }
  groups.fresh.push_back({"bridge.gamma", bridge.gamma, {}, false});
  groups.fresh.push_back({"bridge.beta", bridge.beta, {}, false});
  auto cls = classifier.parameter_groups();
  for (auto& s : cls.pretrained) groups.pretrained.push_back(std::move(s));
  for (auto& s : cls.fresh) groups.fresh.push_back(std::move(s));
  return groups;
}
SalClassNet SalClassNet::clone() const {
  SalClassNet out(config_, 0);
  out.load_state(state());
  out.saliency_pretrained_ = saliency_pretrained_;
  out.classifier.mark_rgb_pretrained(classifier.rgb_pretrained());
  return out;
}

SalClassNet SalClassNet::with_saliency_channel(std::uint64_t seed) const {
  if (uses_saliency_input()) throw ContractError("model already feeds saliency to the classifier");
  ModelConfig config = config_;
  config.classifier.input_channels = 4;
  SalClassNet out(config, seed);
  auto records = state();
  const Tensor& rgb = classifier.first_layer().weight;
  const Tensor extended = extend_first_layer(rgb, seed, default_saliency_init_scale(rgb));
  for (auto& r : records) {
    if (r.name == "classifier.conv1.weight") r = {r.name, extended.shape(), extended.values()};
  }
  out.load_state(records);
  out.saliency_pretrained_ = saliency_pretrained_;
  out.classifier.mark_rgb_pretrained(classifier.rgb_pretrained());
  return out;
}

std::vector<TensorRecord> SalClassNet::state() const {
  std::vector<TensorRecord> records;
  for (const auto& p : parameters()) records.push_back({p.name, p.tensor.shape(), p.tensor.values()});
  const Index c = bridge.stats.running_mean.size();
  records.push_back({"bridge.running_mean", {c}, bridge.stats.running_mean});
  records.push_back({"bridge.running_var", {c}, bridge.stats.running_var});
  return records;
}

void SalClassNet::load_state(const std::vector<TensorRecord>& records) {
  std::map<std::string, const TensorRecord*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;
  auto fetch = [&](const std::string& name, const Shape& shape) -> const Eigen::VectorXd& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ContractError("state is missing tensor '" + name + "'");
    if (it->second->shape != shape) {
      throw ShapeError("state tensor '" + name + "' has shape " + shape_to_string(it->second->shape) +
                       ", model expects " + shape_to_string(shape));
    }
    return it->second->values;
  };
  for (auto& p : parameters()) p.tensor.values() = fetch(p.name, p.tensor.shape());
  const Index c = bridge.stats.running_mean.size();
  bridge.stats.running_mean = fetch("bridge.running_mean", {c});
  bridge.stats.running_var = fetch("bridge.running_var", {c});
}

}  // namespace salclass
