#pragma once

#include <string>

#include "srvfnet/model.hpp"
#include "srvfnet/training.hpp"

namespace srvfnet {

inline constexpr const char* kCheckpointFormat = "srvfnet-checkpoint-v1";

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
};

/// JSON document: format tag, dims, the TrainConfig used, and every tensor
/// in row-major nested arrays. Doubles round-trip exactly, so identical
/// parameters produce identical bytes.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const TrainConfig& config);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace srvfnet
