#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qlinear {

/// Draws from the open interval (0,1); never returns exactly 0 or 1, so
/// pinball subgradients stay well-defined at the extremes.
inline double uniform_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// alpha' = alpha * w + b. No nonlinearity.
inline double embed_level(double alpha, double w, double b) {
    return alpha * w + b;
}

/// M quantile levels with their affine embedding parameters. Slot 0 is the
/// main task and is pinned to level 0.5; slots 1..M-1 are resampled from
/// U(0,1) once per gradient step. With shared_embedding a single (w, b) pair
/// serves every slot; otherwise each slot owns its own pair.
struct QuantileSlots {
    bool shared_embedding = false;
    std::vector<double> levels;    // size M, levels[0] == 0.5
    std::vector<double> weights;   // size M, or 1 when shared
    std::vector<double> biases;

    static QuantileSlots create(int m, bool shared_embedding = false);

    int count() const { return static_cast<int>(levels.size()); }
    int embedding_count() const { return static_cast<int>(weights.size()); }

    double weight(int i) const { return weights[shared_embedding ? 0 : i]; }
    double bias(int i) const { return biases[shared_embedding ? 0 : i]; }
    double embedded(int i) const { return embed_level(levels[i], weight(i), bias(i)); }

    /// Redraws levels 1..M-1 i.i.d. from (0,1). Slot 0 is never touched and
    /// M=1 consumes no randomness.
    void resample(std::mt19937_64& rng);
};

}  // namespace qlinear
