#pragma once

#include "salclass/fixation.hpp"
#include "salclass/image.hpp"
#include "salclass/random.hpp"

#include <vector>

namespace salclass {

struct AugmentConfig {
  Index rescale_target = 340;  // short side after rescaling
  Index crop_size = 299;
  int n_crops = 5;
  bool flips = true;

  /// 64x64 synthetic images: rescale to 72, crop 64.
  static AugmentConfig desk();
  void validate() const;
};

/// Spatial transform applied to one crop: rescale, crop window, optional
/// horizontal flip. Maps source pixel coordinates to crop coordinates.
struct CropGeometry {
  Index source_height = 0;
  Index source_width = 0;
  Index scaled_height = 0;
  Index scaled_width = 0;
  Index top = 0;
  Index left = 0;
  Index size = 0;
  bool flipped = false;

  Fixation apply(const Fixation& f) const;
  bool operator==(const CropGeometry&) const = default;
};

struct AugmentedCrop {
  Image image;
  SaliencyMap heatmap;
  CropGeometry geometry;
};

/// Rescaled extent (h, w) with the short side at `target`, aspect kept.
std::pair<Index, Index> rescaled_extent(Index height, Index width, Index target);

/// Applies one geometry to an image/heatmap pair.
AugmentedCrop apply_geometry(const Image& image, const SaliencyMap& heatmap, const CropGeometry& geometry);

/// n_crops random crops plus (when enabled) their horizontal flips, with the
/// identical transform applied to image and heatmap.
std::vector<AugmentedCrop> augment(const Image& image, const SaliencyMap& heatmap, const AugmentConfig& config,
                                   Rng& rng);

/// Random crop geometries only; `augment` renders exactly these.
std::vector<CropGeometry> sample_crop_geometries(Index height, Index width, const AugmentConfig& config, Rng& rng);

/// Evaluation view: the single central crop of the rescaled image.
CropGeometry center_crop_geometry(Index height, Index width, const AugmentConfig& config);
AugmentedCrop center_crop(const Image& image, const SaliencyMap& heatmap, const AugmentConfig& config);

/// Maps fixations into crop coordinates, dropping those that fall outside.
FixationSet transform_fixations(const FixationSet& fixations, const CropGeometry& geometry);

}  // namespace salclass
