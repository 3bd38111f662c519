#include "qlinear/quantile.hpp"

#include <stdexcept>

namespace qlinear {

QuantileSlots QuantileSlots::create(int m, bool shared) {
    if (m < 1) throw std::invalid_argument("quantile slot count must be >= 1");
    QuantileSlots slots;
    slots.shared_embedding = shared;
    slots.levels.assign(m, 0.5);
    const int n = shared ? 1 : m;
    slots.weights.assign(n, 1.0);  // alpha'_i == alpha_i at step 0
    slots.biases.assign(n, 0.0);
    return slots;
}

void QuantileSlots::resample(std::mt19937_64& rng) {
    for (size_t i = 1; i < levels.size(); ++i) levels[i] = uniform_open(rng);
}

}  // namespace qlinear
