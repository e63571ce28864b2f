#include "salclass/augment.hpp"

#include <cmath>
#include <string>

namespace salclass {

AugmentConfig AugmentConfig::desk() {
  AugmentConfig c;
  c.rescale_target = 72;
  c.crop_size = 64;
  return c;
}

void AugmentConfig::validate() const {
  if (crop_size < 1 || rescale_target < crop_size) {
    throw ContractError("augment: rescale target " + std::to_string(rescale_target) + " smaller than crop " +
                        std::to_string(crop_size));
  }
  if (n_crops < 1) throw ContractError("augment: need at least one crop");
}

std::pair<Index, Index> rescaled_extent(Index height, Index width, Index target) {
  if (height <= width) {
    const auto w = static_cast<Index>(std::lround(static_cast<double>(width) * target / static_cast<double>(height)));
    return {target, w};
  }
  const auto h = static_cast<Index>(std::lround(static_cast<double>(height) * target / static_cast<double>(width)));
  return {h, target};
}

Fixation CropGeometry::apply(const Fixation& f) const {
  // Pixel centres sit on integer coordinates; resize keeps centres aligned.
  const double sy = static_cast<double>(scaled_height) / static_cast<double>(source_height);
  const double sx = static_cast<double>(scaled_width) / static_cast<double>(source_width);
  Fixation out = f;
  out.y = (f.y + 0.5) * sy - 0.5 - static_cast<double>(top);
  out.x = (f.x + 0.5) * sx - 0.5 - static_cast<double>(left);
  if (flipped) out.x = static_cast<double>(size - 1) - out.x;
  return out;
}

AugmentedCrop apply_geometry(const Image& image, const SaliencyMap& heatmap, const CropGeometry& g) {
  if (heatmap.rows() != image.height() || heatmap.cols() != image.width()) {
    throw ShapeError("augment: heatmap and image shapes differ");
  }
  Image scaled = resize_bilinear(image, g.scaled_height, g.scaled_width);
  SaliencyMap scaled_map = resize_bilinear(heatmap, g.scaled_height, g.scaled_width);
  AugmentedCrop out{crop(scaled, g.top, g.left, g.size, g.size),
                    scaled_map.block(g.top, g.left, g.size, g.size), g};
  if (g.flipped) {
    out.image = flip_horizontal(out.image);
    out.heatmap = flip_horizontal(out.heatmap);
  }
  return out;
}

std::vector<CropGeometry> sample_crop_geometries(Index height, Index width, const AugmentConfig& config, Rng& rng) {
  config.validate();
  const auto [sh, sw] = rescaled_extent(height, width, config.rescale_target);
  if (sh < config.crop_size || sw < config.crop_size) throw ContractError("augment: image smaller than crop");
  std::uniform_int_distribution<Index> pick_top(0, sh - config.crop_size);
  std::uniform_int_distribution<Index> pick_left(0, sw - config.crop_size);
  std::vector<CropGeometry> out;
  for (int k = 0; k < config.n_crops; ++k) {
    CropGeometry g{height, width, sh, sw, 0, 0, config.crop_size, false};
    g.top = pick_top(rng);
    g.left = pick_left(rng);
    out.push_back(g);
  }
  if (config.flips) {
    const std::size_t n = out.size();
    for (std::size_t k = 0; k < n; ++k) {
      CropGeometry g = out[k];
      g.flipped = true;
      out.push_back(g);
    }
  }
  return out;
}

std::vector<AugmentedCrop> augment(const Image& image, const SaliencyMap& heatmap, const AugmentConfig& config,
                                   Rng& rng) {
  std::vector<AugmentedCrop> out;
  for (const auto& g : sample_crop_geometries(image.height(), image.width(), config, rng)) {
    out.push_back(apply_geometry(image, heatmap, g));
  }
  return out;
}

CropGeometry center_crop_geometry(Index height, Index width, const AugmentConfig& config) {
  config.validate();
  const auto [sh, sw] = rescaled_extent(height, width, config.rescale_target);
  if (sh < config.crop_size || sw < config.crop_size) throw ContractError("augment: image smaller than crop");
  return {height, width, sh, sw, (sh - config.crop_size) / 2, (sw - config.crop_size) / 2, config.crop_size, false};
}

AugmentedCrop center_crop(const Image& image, const SaliencyMap& heatmap, const AugmentConfig& config) {
  return apply_geometry(image, heatmap, center_crop_geometry(image.height(), image.width(), config));
}

FixationSet transform_fixations(const FixationSet& fixations, const CropGeometry& geometry) {
  FixationSet out;
  for (const auto& f : fixations) {
    const Fixation t = geometry.apply(f);
    if (t.x > -0.5 && t.y > -0.5 && t.x < geometry.size - 0.5 && t.y < geometry.size - 0.5) out.push_back(t);
  }
  return out;
}

}  // namespace salclass
