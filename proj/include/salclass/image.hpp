#pragma once

#include "salclass/tensor.hpp"

#include <span>
#include <vector>

namespace salclass {

/// One image channel or one saliency map, row-major h x w.
using Plane = RowMatrix;

/// Single-channel map of per-pixel saliency (predicted Y or ground truth T).
using SaliencyMap = Plane;

/// Multi-channel image with values nominally in [0,1].
struct Image {
  std::vector<Plane> channels;

  Image() = default;
  Image(Index n_channels, Index height, Index width)
      : channels(static_cast<std::size_t>(n_channels), Plane::Zero(height, width)) {}

  Index n_channels() const { return static_cast<Index>(channels.size()); }
  Index height() const { return channels.empty() ? 0 : channels.front().rows(); }
  Index width() const { return channels.empty() ? 0 : channels.front().cols(); }

  bool operator==(const Image& other) const { return channels == other.channels; }
};

/// Min-max normalization to [0,1]; a constant map becomes all zeros.
template <typename Derived>
SaliencyMap normalize_map(const Eigen::MatrixBase<Derived>& map) {
  const double lo = map.minCoeff();
  const double hi = map.maxCoeff();
  if (!(hi > lo)) return SaliencyMap::Zero(map.rows(), map.cols());
  SaliencyMap out = (map.array() - lo) / (hi - lo);
  return out;
}

/// Resampling with pixel-centre alignment (the usual image-resize rule), used
/// for data augmentation where image and heatmap must move in lockstep.
Plane resize_bilinear(const Plane& plane, Index out_h, Index out_w);
Image resize_bilinear(const Image& image, Index out_h, Index out_w);

inline Plane flip_horizontal(const Plane& plane) { return plane.rowwise().reverse(); }
Image flip_horizontal(const Image& image);

Image crop(const Image& image, Index top, Index left, Index height, Index width);

/// Packs images into [N,C,H,W]; all images must share one shape.
Tensor stack_images(std::span<const Image> images);
/// Packs maps into [N,1,H,W].
Tensor stack_maps(std::span<const SaliencyMap> maps);
/// Extracts sample n, channel c of a [N,C,H,W] tensor as a plane.
Plane plane_from_tensor(const Tensor& tensor, Index n, Index c = 0);

}  // namespace salclass
