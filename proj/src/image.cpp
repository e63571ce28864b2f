#include "salclass/image.hpp"

#include <algorithm>
#include <cmath>

namespace salclass {

namespace {

struct Taps {
  std::vector<Index> lo, hi;
  std::vector<double> frac;
};

Taps half_pixel_taps(Index in, Index out) {
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (Index i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const Index lo = std::min(static_cast<Index>(std::floor(src)), in - 1);
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - static_cast<double>(lo);
  }
  return t;
}

}  // namespace

Plane resize_bilinear(const Plane& plane, Index out_h, Index out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: output extent must be positive");
  if (plane.rows() == out_h && plane.cols() == out_w) return plane;
  const Taps ty = half_pixel_taps(plane.rows(), out_h);
  const Taps tx = half_pixel_taps(plane.cols(), out_w);
  Plane out(out_h, out_w);
  for (Index i = 0; i < out_h; ++i) {
    const double fy = ty.frac[i];
    for (Index j = 0; j < out_w; ++j) {
      const double fx = tx.frac[j];
      const double top = (1.0 - fx) * plane(ty.lo[i], tx.lo[j]) + fx * plane(ty.lo[i], tx.hi[j]);
      const double bottom = (1.0 - fx) * plane(ty.hi[i], tx.lo[j]) + fx * plane(ty.hi[i], tx.hi[j]);
      out(i, j) = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, Index out_h, Index out_w) {
  Image out;
  for (const auto& c : image.channels) out.channels.push_back(resize_bilinear(c, out_h, out_w));
  return out;
}

Image flip_horizontal(const Image& image) {
  Image out;
  for (const auto& c : image.channels) out.channels.push_back(flip_horizontal(c));
  return out;
}

Image crop(const Image& image, Index top, Index left, Index height, Index width) {
  if (top < 0 || left < 0 || top + height > image.height() || left + width > image.width()) {
    throw ShapeError("crop window exceeds image bounds");
  }
  Image out;
  for (const auto& c : image.channels) out.channels.emplace_back(c.block(top, left, height, width));
  return out;
}

Tensor stack_images(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("stack_images: empty batch");
  const Index c = images[0].n_channels(), h = images[0].height(), w = images[0].width();
  Tensor out({static_cast<Index>(images.size()), c, h, w});
  double* dst = out.data();
  for (const auto& img : images) {
    if (img.n_channels() != c || img.height() != h || img.width() != w) {
      throw ShapeError("stack_images: images differ in shape");
    }
    for (const auto& plane : img.channels) {
      Eigen::Map<Plane>(dst, h, w) = plane;
      dst += h * w;
    }
  }
  return out;
}

Tensor stack_maps(std::span<const SaliencyMap> maps) {
  if (maps.empty()) throw ShapeError("stack_maps: empty batch");
  const Index h = maps[0].rows(), w = maps[0].cols();
  Tensor out({static_cast<Index>(maps.size()), 1, h, w});
  double* dst = out.data();
  for (const auto& m : maps) {
    if (m.rows() != h || m.cols() != w) throw ShapeError("stack_maps: maps differ in shape");
    Eigen::Map<Plane>(dst, h, w) = m;
    dst += h * w;
  }
  return out;
}

Plane plane_from_tensor(const Tensor& tensor, Index n, Index c) {
  if (tensor.rank() != 4) throw ShapeError("plane_from_tensor: expected rank 4, got " + shape_to_string(tensor.shape()));
  const Index h = tensor.dim(2), w = tensor.dim(3);
  const Index offset = (n * tensor.dim(1) + c) * h * w;
  return Eigen::Map<const Plane>(tensor.data() + offset, h, w);
}

}  // namespace salclass
