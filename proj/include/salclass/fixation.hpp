#pragma once

#include "salclass/image.hpp"

#include <filesystem>
#include <vector>

namespace salclass {

/// Gaze dwell point in image pixel coordinates. Pixel (row i, col j) has its
/// centre at (x = j, y = i).
struct Fixation {
  double x = 0.0;
  double y = 0.0;
  double duration_ms = 0.0;

  bool operator==(const Fixation&) const = default;
};

using FixationSet = std::vector<Fixation>;

enum class FixationWeighting { uniform, duration };

inline bool in_bounds(const Fixation& f, Index height, Index width) {
  return f.x >= 0.0 && f.y >= 0.0 && f.x < static_cast<double>(width) && f.y < static_cast<double>(height);
}

/// Nearest pixel (row, col) of a fixation, clamped into the map.
std::pair<Index, Index> nearest_pixel(const Fixation& f, Index height, Index width);

struct FixationIngest {
  FixationSet kept;
  std::size_t rejected = 0;
};

/// Splits a raw fixation list into in-bounds points and a rejected count.
FixationIngest ingest_fixations(const FixationSet& raw, Index height, Index width);

/// Default smoothing: 0.035 x short side, about one visual degree.
double default_sigma_px(Index height, Index width);

/// Sum of isotropic Gaussians (truncated at 3 sigma) centred at the
/// in-bounds fixations, min-max normalized to [0,1].
SaliencyMap fixations_to_heatmap(const FixationSet& fixations, Index height, Index width, double sigma_px,
                                 FixationWeighting weighting = FixationWeighting::uniform);

/// CSV with header `x,y,duration_ms`; the header line is optional on read.
FixationSet read_fixations_csv(const std::filesystem::path& path);
void write_fixations_csv(const std::filesystem::path& path, const FixationSet& fixations);

}  // namespace salclass
