#include "salclass/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace salclass {

double cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& probs, int target) {
  if (target < 0 || target >= probs.size()) {
    throw ContractError("cross_entropy: class index " + std::to_string(target) + " outside [0," +
                        std::to_string(probs.size()) + ")");
  }
  return -std::log(std::max(probs[target], kProbabilityFloor));
}

double mse_saliency(const SaliencyMap& predicted, const SaliencyMap& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw ContractError("mse_saliency: maps differ in shape");
  }
  return (predicted - target).squaredNorm() / static_cast<double>(predicted.size());
}

LossTerms multi_loss(const Eigen::Ref<const Eigen::VectorXd>& probs, const SaliencyMap& predicted, int target,
                     const SaliencyMap& truth, double alpha) {
  LossTerms t;
  t.classification = cross_entropy(probs, target);
  t.saliency = mse_saliency(predicted, truth);
  t.total = alpha * t.classification + t.saliency;
  return t;
}

LossTensors multi_loss(const Tensor& probs, const Tensor& predicted, std::span<const int> labels,
                       const Tensor& truth, double alpha) {
  LossTensors t;
  t.classification = cross_entropy(probs, labels);
  t.saliency = mse(predicted, truth);
  t.total = add(scale(t.classification, alpha), t.saliency);
  return t;
}

}  // namespace salclass
