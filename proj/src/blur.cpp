#include "salclass/blur.hpp"

#include <cmath>

namespace salclass {

namespace {

// Mirror index into [0, n) with the edge sample repeated: ... b a | a b ...
Index reflect(Index i, Index n) {
  const Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Eigen::VectorXd gaussian_kernel(double variance) {
  const double sigma = std::sqrt(variance);
  const Index radius = static_cast<Index>(std::ceil(3.0 * sigma));
  Eigen::VectorXd k(2 * radius + 1);
  for (Index i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-static_cast<double>(i * i) / (2.0 * variance));
  }
  return k / k.sum();
}

}  // namespace

std::vector<BlurStep> blur_schedule(double initial_variance, double step, double interval_s) {
  if (!(initial_variance > 0.0) || !(step > 0.0)) {
    throw ContractError("blur_schedule: initial variance and step must be positive");
  }
  if (!(interval_s > 0.0)) throw ContractError("blur_schedule: interval must be positive");
  const auto n = static_cast<long>(std::ceil(initial_variance / step - 1e-12));
  std::vector<BlurStep> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) {
    const double v = k == n ? 0.0 : std::max(0.0, initial_variance - static_cast<double>(k) * step);
    out.push_back({static_cast<double>(k) * interval_s, v});
  }
  return out;
}

Plane apply_gaussian_blur(const Plane& plane, double variance) {
  if (variance < 0.0) throw ContractError("apply_gaussian_blur: negative variance");
  if (variance == 0.0) return plane;
  const Eigen::VectorXd k = gaussian_kernel(variance);
  const Index r = (k.size() - 1) / 2;
  const Index h = plane.rows(), w = plane.cols();
  Plane horizontal(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      double acc = 0.0;
      for (Index t = -r; t <= r; ++t) acc += k[t + r] * plane(i, reflect(j + t, w));
      horizontal(i, j) = acc;
    }
  }
  Plane out(h, w);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      double acc = 0.0;
      for (Index t = -r; t <= r; ++t) acc += k[t + r] * horizontal(reflect(i + t, h), j);
      out(i, j) = acc;
    }
  }
  return out;
}

Image apply_gaussian_blur(const Image& image, double variance) {
  Image out;
  for (const auto& c : image.channels) out.channels.push_back(apply_gaussian_blur(c, variance));
  return out;
}

}  // namespace salclass
