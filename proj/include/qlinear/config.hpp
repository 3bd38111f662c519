#pragma once

#include "qlinear/train.hpp"

#include <array>
#include <string>
#include <vector>

namespace qlinear {

/// Parses "6:2:2" or "0.7:0.1:0.2" into normalized split ratios.
std::array<double, 3> parse_ratios(const std::string& text);

/// Flat `key = value` config with [data], [model], [train] and [grid]
/// sections. Unknown sections or keys are errors.
TrainConfig parse_config_file(const std::string& path);

/// Applies one `section.key = value` assignment (used by the file parser and
/// by tests).
void apply_config_entry(TrainConfig& config, const std::string& section,
                        const std::string& key, const std::string& value);

/// Canonical echo of the effective configuration, embedded into every output
/// artifact. Stable ordering, full precision.
std::string effective_config_text(const TrainConfig& config, const std::string& data_path);

}  // namespace qlinear
