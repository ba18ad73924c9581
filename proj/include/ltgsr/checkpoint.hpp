#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ltgsr/config.hpp"

namespace ltgsr {

inline constexpr char kCheckpointMagic[8] = {'L', 'T', 'G', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

/// One named parameter plus its optimizer moments (empty tensors when the optimizer
/// has not touched it yet).
struct ParamBlob {
  std::string name;
  bool trainable = true;
  Tensor value;
  Tensor m;
  Tensor v;
  std::int64_t t = 0;
};

/// Position in the training schedule. All randomness is derived from the seeds and
/// these counters, so they are the whole RNG state.
struct TrainState {
  int epoch = 0;
  int step_in_epoch = 0;
  std::uint64_t global_step = 0;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  ModelConfig model;
  TrainConfig train;
  TrainState state;
  std::vector<ParamBlob> params;
};

/// Layout: 8-byte magic "LTGCKPT1", u64 little-endian header length, JSON header
/// (config, state, and per-blob name/shape/dtype/offset), then the raw little-endian
/// float64 blobs back to back.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace ltgsr
