#pragma once

#include "salclass/dataset.hpp"
#include "salclass/fixation.hpp"
#include "salclass/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace salclass {

/// ROC area of positive against negative scores by an exact threshold sweep
/// with trapezoids. Ties between a positive and a negative count one half.
double auc_from_scores(std::span<const double> positives, std::span<const double> negatives);

/// Pearson correlation of the flattened maps, clamped to [-1, 1].
/// Throws DegenerateError if either map is constant.
double pearson_cc(const SaliencyMap& predicted, const SaliencyMap& truth);

/// Mean of the z-scored map (population std) at the nearest pixels of the
/// fixations. Throws DegenerateError for a constant map or no fixations.
double nss(const SaliencyMap& map, const FixationSet& fixations);

/// Shuffled AUC: map values at the positives against equally many
/// negatives drawn from the pool, averaged over n_splits draws. Draws are
/// without replacement when the pool is large enough, with replacement
/// otherwise. Throws ContractError for empty or out-of-bounds points.
double shuffled_auc(const SaliencyMap& map, const FixationSet& positives, const FixationSet& negatives, int n_splits,
                    std::uint64_t rng_seed);

struct MetricConfig {
  int n_splits = 100;
  std::uint64_t seed = 0;
};

struct ImageMetrics {
  std::string image_id;
  double s_auc = 0.0;  // NaN when skipped
  double nss = 0.0;
  double cc = 0.0;
};

struct MetricReport {
  double s_auc = 0.0;  // unweighted means over the images that were scored
  double nss = 0.0;
  double cc = 0.0;
  std::vector<ImageMetrics> per_image;
  int skipped_s_auc = 0;
  int skipped_nss = 0;
  int skipped_cc = 0;
};

/// One predicted map with its ground truth, in a shared coordinate frame.
struct MapPair {
  std::string image_id;
  SaliencyMap predicted;
  SaliencyMap truth;
  FixationSet fixations;
};

/// Scores every pair. The s-AUC negatives for image i are the in-bounds
/// fixations of all other images. Images run in parallel (capped by
/// SALCLASS_THREADS); the means are reduced in image order.
MetricReport evaluate_maps(std::span<const MapPair> pairs, const MetricConfig& config);

/// Ground-truth heatmaps scored as predictions against themselves.
MetricReport human_baseline(const Dataset& dataset, const MetricConfig& config);

/// Worker count from SALCLASS_THREADS, else the hardware concurrency.
unsigned worker_threads();

void write_metric_csv(const std::filesystem::path& path, const MetricReport& report);
std::string metric_summary_json(const MetricReport& report);
void write_metric_json(const std::filesystem::path& path, const MetricReport& report);

}  // namespace salclass
