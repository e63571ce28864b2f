#pragma once

#include "salclass/ops.hpp"
#include "salclass/random.hpp"

#include <string>
#include <utility>
#include <vector>

namespace salclass {

/// A trainable tensor with its checkpoint name.
struct NamedParameter {
  std::string name;
  Tensor tensor;
  bool weight_decay = true;
};

/// A parameter, or a set of contiguous flat ranges inside it, that shares one
/// learning rate. An empty range list means the whole tensor.
struct ParameterSlice {
  std::string name;
  Tensor tensor;
  std::vector<std::pair<Index, Index>> ranges;  // [begin, end)
  bool weight_decay = true;

  Index count() const;
};

/// Zero-mean Gaussian with std sqrt(2 / fan_in).
Tensor he_normal(Shape shape, Index fan_in, Rng& rng);
Tensor gaussian(Shape shape, double stddev, Rng& rng);

struct Conv2dLayer {
  Tensor weight;  // [K,C,kh,kw]
  Tensor bias;    // [K]
  Index stride = 1;
  Index padding = 0;

  static Conv2dLayer he_init(Index in_channels, Index out_channels, Index kernel, Index stride, Index padding,
                             Rng& rng);
  Tensor operator()(const Tensor& input) const { return conv2d(input, weight, bias, stride, padding); }
  Index in_channels() const { return weight.dim(1); }
  Index out_channels() const { return weight.dim(0); }
};

struct LinearLayer {
  Tensor weight;  // [M,D]
  Tensor bias;    // [M]

  static LinearLayer init(Index in_features, Index out_features, Rng& rng);
  Tensor operator()(const Tensor& input) const { return linear(input, weight, bias); }
};

struct BatchNorm2dLayer {
  Tensor gamma;
  Tensor beta;
  BatchNormStats stats;

  explicit BatchNorm2dLayer(Index channels = 1);
  Tensor operator()(const Tensor& input, NormMode mode) { return batchnorm2d(input, gamma, beta, stats, mode); }
};

}  // namespace salclass
