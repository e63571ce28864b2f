#pragma once

#include "salclass/augment.hpp"
#include "salclass/dataset.hpp"
#include "salclass/losses.hpp"
#include "salclass/model.hpp"
#include "salclass/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace salclass {

/// Which validation metric picks the returned checkpoint.
enum class Selection { classification, saliency };

/// Resolution at which the saliency loss compares maps.
enum class LossResolution { full, coarse };

struct TrainConfig {
  double alpha = 0.2;
  double lr = 0.001;                    // base rate l (pretrained group)
  std::optional<double> lr_fresh;       // fresh group; defaults to lr
  double momentum = 0.9;
  double weight_decay = 0.0005;
  Index batch_size = 16;
  double decay_constant = kLrDecayConstant;
  int patience_epochs = 10;
  int max_epochs = 120;
  std::uint64_t seed = 0;
  double stagnation_tolerance = 1e-6;
  Selection selection = Selection::classification;
  LossResolution loss_resolution = LossResolution::full;
  AugmentConfig augment;

  /// End-to-end fine-tuning settings of the original training recipe.
  static TrainConfig paper();
  /// Settings for the 64x64 synthetic task: all-fresh weights, so a higher
  /// rate, and a longer patience to ride out the classifier's early plateau.
  static TrainConfig desk();

  double fresh_lr() const { return lr_fresh.value_or(lr); }
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  std::int64_t iteration = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_class = 0.0;
  double loss_sal = 0.0;
  double val_mca = 0.0;
  double val_mse = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainState {
  int epoch = 0;                 // completed epochs
  std::int64_t iteration = 0;    // completed SGD steps
  MomentumBuffers momentum;
  double best_val_mca = -std::numeric_limits<double>::infinity();
  int best_mca_epoch = 0;
  int epochs_since_mca_improvement = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
  int best_mse_epoch = 0;
  int epochs_since_mse_improvement = 0;
  int selected_epoch = 0;
  std::vector<TensorRecord> best_snapshot;  // model state at selected_epoch
  std::vector<EpochRecord> history;

  bool stagnant(int patience) const {
    return epochs_since_mca_improvement >= patience && epochs_since_mse_improvement >= patience;
  }
};

struct EpochLosses {
  double total = 0.0;
  double classification = 0.0;
  double saliency = 0.0;
};

/// One pass over the shuffled training set (shuffle seeded by seed + epoch).
/// Each visit renders one of the augmentation variants of the sample.
/// Throws NumericalError on a non-finite loss.
EpochLosses train_epoch(SalClassNet& model, const Dataset& dataset, const TrainConfig& config, TrainState& state);

struct ValidationMetrics {
  double mca = 0.0;
  double mse = 0.0;
};

/// Center-crop evaluation in eval mode: mean class accuracy and saliency MSE.
ValidationMetrics evaluate(SalClassNet& model, const Dataset& dataset, const TrainConfig& config);

using EpochCallback = std::function<void(const TrainState&, const EpochRecord&, const SalClassNet&)>;

/// Epoch loop with early stopping (both validation metrics stagnant for
/// patience epochs) and model selection. Starts from `state`, so a state
/// restored from a checkpoint resumes the run. On return the model holds the
/// last-epoch weights; state.best_snapshot holds the selected ones.
TrainState train(SalClassNet& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                 TrainState state = {}, const EpochCallback& on_epoch = {});

struct ClassificationReport {
  double mca = 0.0;
  std::vector<double> per_class;     // NaN for classes without samples
  std::vector<int> empty_classes;
};

/// Per-class accuracy averaged over classes that have samples.
ClassificationReport mean_class_accuracy(std::span<const int> predicted, std::span<const int> labels,
                                         Index n_classes);

/// MCA of the model on center crops; classes with no samples are excluded
/// and reported on stderr.
double evaluate_classification(SalClassNet& model, const Dataset& dataset, const AugmentConfig& augment,
                               Index batch_size = 16);

struct Prediction {
  std::string image_id;
  int predicted_class = 0;
  SaliencyMap map;        // full-resolution saliency output on the center crop
  SaliencyMap truth;      // center-cropped ground-truth heatmap
  FixationSet fixations;  // fixations in crop coordinates
};

/// Center-crop predictions for every sample, in dataset order.
std::vector<Prediction> predict(SalClassNet& model, const Dataset& dataset, const AugmentConfig& augment,
                                Index batch_size = 16);

/// Append-only CSV training log. A new file gets a timestamped comment line
/// and the column header; timestamps appear nowhere else.
class TrainLog {
 public:
  explicit TrainLog(std::filesystem::path path);
  void append(const EpochRecord& record);
  const std::filesystem::path& path() const { return path_; }

  static constexpr const char* kHeader = "epoch,iter,lr,loss_total,loss_class,loss_sal,val_mca,val_mse";

 private:
  std::filesystem::path path_;
};

}  // namespace salclass
