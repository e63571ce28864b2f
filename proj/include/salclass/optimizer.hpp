#pragma once

#include "salclass/layers.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace salclass {

inline constexpr double kLrDecayConstant = 1e-5;

/// 1/t decay: base / (1 + decay * iteration).
double lr_at(double base_lr, std::int64_t iteration, double decay_constant = kLrDecayConstant);

/// Momentum buffers keyed by parameter name, each the parameter's full size.
using MomentumBuffers = std::map<std::string, Eigen::VectorXd>;

struct GroupStep {
  std::vector<ParameterSlice> slices;
  double lr = 0.0;
};

/// Classical momentum SGD with L2 weight decay, per slice:
///   v <- momentum * v + (grad + weight_decay * p);  p <- p - lr * v
/// Slices flagged without weight decay skip the L2 term. A parameter with no
/// gradient is treated as having a zero gradient.
void sgd_step(std::span<const GroupStep> groups, MomentumBuffers& buffers, double momentum, double weight_decay);

/// Clears gradients of every parameter.
void zero_grad(std::span<const NamedParameter> params);

}  // namespace salclass
