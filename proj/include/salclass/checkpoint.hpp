#pragma once

#include "salclass/model.hpp"
#include "salclass/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace salclass {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[4] = {'S', 'C', 'N', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Model weights plus the training state needed to resume.
///
/// Layout (all integers and floats little-endian):
///   "SCNC", u32 version
///   u32 record count, then per record:
///     u32 name length, UTF-8 name, u32 rank, u64 extents[rank], f64 payload[numel]
///   TrainState scalars: i32 epoch, i64 iteration,
///     f64 best_val_mca, i32 best_mca_epoch, i32 epochs_since_mca_improvement,
///     f64 best_val_mse, i32 best_mse_epoch, i32 epochs_since_mse_improvement,
///     i32 selected_epoch, u32 history length,
///     history rows (i32 epoch, i64 iter, f64 lr, loss_total, loss_class, loss_sal, val_mca, val_mse)
/// Model tensors are stored under their own names, momentum buffers under
/// "momentum/<name>" and the selected snapshot under "best/<name>".
struct Checkpoint {
  std::vector<TensorRecord> model;
  TrainState state;
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

inline Checkpoint make_checkpoint(const SalClassNet& model, const TrainState& state) {
  return {model.state(), state};
}

/// Checkpoint whose model tensors are the selected snapshot.
Checkpoint best_checkpoint(const TrainState& state);

/// Looks up a model tensor by name.
const TensorRecord& find_record(const Checkpoint& checkpoint, const std::string& name);

}  // namespace salclass
