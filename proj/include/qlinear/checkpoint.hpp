#pragma once

#include "qlinear/model.hpp"
#include "qlinear/train.hpp"

#include <string>

namespace qlinear {

/// Everything needed to rebuild a trained model plus the data protocol it was
/// trained under. stats_ref is the standardizer file, relative to the
/// checkpoint's directory unless absolute.
struct Checkpoint {
    ModelParams params;
    std::string stats_ref;
    std::uint64_t seed = 0;
    std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
    bool lookback_bridging = true;
    bool standardize = true;
};

/// Binary container, little-endian, doubles as IEEE-754 bits, matrices
/// row-major. Versioned with a magic string and a format version integer.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Resolves a checkpoint's stats_ref against the checkpoint's location.
std::string resolve_stats_path(const std::string& checkpoint_path, const std::string& stats_ref);

}  // namespace qlinear
