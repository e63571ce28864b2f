#include "salclass/layers.hpp"

#include <cmath>

namespace salclass {

Index ParameterSlice::count() const {
  if (ranges.empty()) return tensor.size();
  Index n = 0;
  for (const auto& [b, e] : ranges) n += e - b;
  return n;
}

Tensor gaussian(Shape shape, double stddev, Rng& rng) {
  const Index n = shape_numel(shape);
  Eigen::VectorXd values(n);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index i = 0; i < n; ++i) values[i] = stddev * dist(rng);
  return Tensor(std::move(shape), std::move(values), true);
}

Tensor he_normal(Shape shape, Index fan_in, Rng& rng) {
  return gaussian(std::move(shape), std::sqrt(2.0 / static_cast<double>(fan_in)), rng);
}

Conv2dLayer Conv2dLayer::he_init(Index in_channels, Index out_channels, Index kernel, Index stride,
                                 Index padding, Rng& rng) {
  Conv2dLayer layer;
  layer.weight = he_normal({out_channels, in_channels, kernel, kernel}, in_channels * kernel * kernel, rng);
  layer.bias = Tensor({out_channels}, true);
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

LinearLayer LinearLayer::init(Index in_features, Index out_features, Rng& rng) {
  LinearLayer layer;
  layer.weight = gaussian({out_features, in_features}, std::sqrt(1.0 / static_cast<double>(in_features)), rng);
  layer.bias = Tensor({out_features}, true);
  return layer;
}

BatchNorm2dLayer::BatchNorm2dLayer(Index channels)
    : gamma(Tensor::full({channels}, 1.0, true)), beta(Tensor({channels}, true)), stats(channels) {}

}  // namespace salclass
