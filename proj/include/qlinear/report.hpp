#pragma once

#include "qlinear/eval.hpp"
#include "qlinear/train.hpp"

#include <string>
#include <vector>

namespace qlinear {

/// Shortest round-trippable decimal form ("%.17g").
std::string fmt_g17(double v);

/// One record per epoch: epoch, train loss, val MAE, elapsed seconds.
/// checkpoint_ref names the parameter file the report belongs to.
std::string train_report_text(const TrainReport& report, const std::string& config_echo,
                              const std::string& checkpoint_ref = "");

/// Grid-search selection summary. Deliberately timing-free so reruns are
/// byte-identical.
std::string grid_summary_text(const GridResult& result, const std::string& config_echo);

struct MetricsRow {
    std::string dataset;
    Variant variant = Variant::QN;
    long lookback = 0;
    long horizon = 0;
    int m = 0;
    std::string split;
    double mae = 0.0;
    double mse = 0.0;
    long parameter_count = 0;
    std::uint64_t seed = 0;
};

std::string metrics_report_text(const std::vector<MetricsRow>& rows);

/// Writes via a temp file + rename so partial output is never observed.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace qlinear
