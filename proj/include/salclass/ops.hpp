#pragma once

#include "salclass/tensor.hpp"

#include <span>
#include <vector>

namespace salclass {

/// 2-D cross-correlation (no kernel flip).
/// input [N,C,H,W], kernel [K,C,kh,kw], bias [K] -> [N,K,H',W'] with
/// H' = floor((H + 2*padding - kh) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, Index stride = 1, Index padding = 0);

struct MaxPoolResult {
  Tensor output;
  /// Flat input index chosen for every output cell (first row-major maximum).
  std::vector<Index> argmax;
};

/// Window max pooling. With ceil_mode the last window may hang over the
/// border and is clipped, as in Caffe-style pooling.
MaxPoolResult maxpool2d(const Tensor& input, Index window, Index stride, bool ceil_mode = false);

/// Output extent of a pooling (or valid conv) window sweep.
Index pooled_extent(Index extent, Index window, Index stride, bool ceil_mode);

Tensor relu(const Tensor& input);

/// input [N,D], weight [M,D], bias [M] -> [N,M].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Row-wise softmax over [N,n], max-subtracted.
Tensor softmax(const Tensor& input);

enum class NormMode { train, eval };

/// Running statistics owned by a batch-norm layer.
struct BatchNormStats {
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;

  explicit BatchNormStats(Index channels = 0)
      : running_mean(Eigen::VectorXd::Zero(channels)), running_var(Eigen::VectorXd::Ones(channels)) {}
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Per-channel batch normalization over [N,C,H,W]. Train mode normalizes by
/// biased batch statistics and folds them into `stats` (unbiased variance);
/// eval mode uses `stats` unchanged.
Tensor batchnorm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                   NormMode mode, double epsilon = kBatchNormEpsilon, double momentum = kBatchNormMomentum);

/// Align-corners bilinear resize of [N,C,h,w] to [N,C,out_h,out_w].
Tensor bilinear_upsample(const Tensor& input, Index out_h, Index out_w);

/// Concatenates [N,Ca,H,W] and [N,Cb,H,W] along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// [N,C,H,W] -> [N,C] spatial mean.
Tensor global_avg_pool(const Tensor& input);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, double factor);
Tensor sum(const Tensor& input);
Tensor mean(const Tensor& input);

/// Mean of squared differences over all elements; identical shapes required.
Tensor mse(const Tensor& prediction, const Tensor& target);

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over rows of -log(max(probs[r, labels[r]], 1e-12)) for probs [N,n].
Tensor cross_entropy(const Tensor& probs, std::span<const int> labels);

}  // namespace salclass
