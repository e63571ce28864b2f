#pragma once

#include "salclass/fixation.hpp"
#include "salclass/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace salclass {

/// One training/evaluation record.
struct Sample {
  std::string image_id;
  Image image;  // 3 channels in [0,1]
  int label = 0;
  FixationSet fixations;
  SaliencyMap heatmap;  // same spatial shape as image
};

struct Dataset {
  std::vector<Sample> samples;
  Index n_classes = 0;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

struct ManifestEntry {
  std::string image_id;
  std::string relative_path;
  int class_index = 0;
  std::string fixation_file;

  bool operator==(const ManifestEntry&) const = default;
};

enum class Split { train, val, test };
const char* split_name(Split split);
Split parse_split(const std::string& name);

/// Line-oriented manifest, UTF-8 with LF endings:
///   # comment
///   @class<TAB>index<TAB>name
///   @fractions<TAB>train<TAB>val<TAB>test
///   @split<TAB>train|val|test        (following entries belong to it)
///   image_id<TAB>relative_path<TAB>class_index<TAB>fixation_file
/// Paths are relative to the manifest's directory.
struct Manifest {
  std::filesystem::path root;
  std::vector<std::string> classes;
  std::optional<std::array<double, 3>> fractions;
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> val;
  std::vector<ManifestEntry> test;

  const std::vector<ManifestEntry>& entries(Split split) const;
  std::vector<ManifestEntry>& entries(Split split);
  std::size_t total() const { return train.size() + val.size() + test.size(); }

  /// Checks class indices, split disjointness and recorded proportions.
  void validate() const;

  bool operator==(const Manifest& other) const {
    return classes == other.classes && fractions == other.fractions && train == other.train &&
           val == other.val && test == other.test;
  }
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct HeatmapOptions {
  double sigma_px = 0.0;  // <= 0 selects default_sigma_px
  FixationWeighting weighting = FixationWeighting::uniform;
};

struct LoadReport {
  std::size_t samples = 0;
  std::size_t rejected_fixations = 0;
};

/// Reads images and fixation files of one split and renders heatmaps.
Dataset load_split(const Manifest& manifest, Split split, const HeatmapOptions& options = {},
                   LoadReport* report = nullptr);

/// Synthetic top-down saliency task. Each image holds a low-contrast grating
/// patch whose orientation encodes the class, and a higher-contrast distractor
/// grating with another class's orientation. Fixations scatter around the
/// class patch, so the informative region differs from the most salient
/// bottom-up region.
struct SynthConfig {
  Index n_classes = 4;
  Index n_per_class = 32;
  Index image_size = 64;
  std::uint64_t seed = 7;
  Index patch_size = 0;  // 0 -> image_size / 4
  double target_amplitude = 0.15;
  double distractor_amplitude = 0.40;
  double grating_period = 4.0;
  double noise_std = 0.03;
  int fixations_per_image = 8;
  double fixation_scatter = 0.0;  // px; 0 -> patch_size / 4
  double distractor_fixation_prob = 0.0;
  std::array<double, 3> fractions = {0.8, 0.1, 0.1};

  void validate() const;
};

/// Writes images/, fixations/ and manifest.tsv under `out_dir` and returns
/// the manifest. Byte-identical output for identical configs.
Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

/// Renders one synthetic sample in memory (used by synth_dataset).
Sample synth_sample(const SynthConfig& config, int label, std::uint64_t index);

}  // namespace salclass
