#pragma once

#include "salclass/image.hpp"

#include <vector>

namespace salclass {

struct BlurStep {
  double time_s;
  double variance;

  bool operator==(const BlurStep&) const = default;
};

/// Progressive de-blur timeline: variance starts at `initial_variance` and
/// drops by `step` every `interval_s` seconds, clamped so the last entry is
/// exactly 0 (unblurred). Paper protocol: (10, 1, 0.5) -> 11 steps to t = 5 s.
std::vector<BlurStep> blur_schedule(double initial_variance = 10.0, double step = 1.0, double interval_s = 0.5);

/// Separable Gaussian blur of the given variance, kernel truncated at 3 sigma,
/// half-sample symmetric (reflective) borders. Variance 0 is the identity.
Plane apply_gaussian_blur(const Plane& plane, double variance);
Image apply_gaussian_blur(const Image& image, double variance);

}  // namespace salclass
