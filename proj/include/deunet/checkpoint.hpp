#pragma once

#include <cstdint>
#include <string>

#include "deunet/network.hpp"

namespace deunet {

struct CheckpointMeta {
  int format_version = 1;
  std::uint64_t seed = 0;
  int epochs_trained = 0;
};

/// JSON checkpoint; numbers round-trip losslessly, so a save/load cycle
/// reproduces bit-identical inference outputs.
void save_checkpoint(const Network& net, const CheckpointMeta& meta, const std::string& path);

struct LoadedCheckpoint {
  Network net;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace deunet
