#pragma once

#include "salclass/image.hpp"
#include "salclass/ops.hpp"

#include <span>

namespace salclass {

/// Classification term: -log(y_t), with y_t floored at 1e-12.
double cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& probs, int target);

/// Saliency term: mean squared difference over the h x w map.
double mse_saliency(const SaliencyMap& predicted, const SaliencyMap& target);

struct LossTerms {
  double total = 0.0;
  double classification = 0.0;
  double saliency = 0.0;
};

/// total = alpha * classification + saliency. The weight sits on the
/// classification term.
LossTerms multi_loss(const Eigen::Ref<const Eigen::VectorXd>& probs, const SaliencyMap& predicted, int target,
                     const SaliencyMap& truth, double alpha);

struct LossTensors {
  Tensor total;
  Tensor classification;
  Tensor saliency;
};

/// Batch version on the autodiff tape: classification is the mean
/// cross-entropy over rows of probs, saliency the MSE of predicted vs truth.
LossTensors multi_loss(const Tensor& probs, const Tensor& predicted, std::span<const int> labels,
                       const Tensor& truth, double alpha);

}  // namespace salclass
