#pragma once

#include "qlinear/dataset.hpp"
#include "qlinear/loss.hpp"
#include "qlinear/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qlinear {

struct TrainConfig {
    Variant variant = Variant::QN;
    long lookback = 336;
    long horizon = 96;
    int m = 1;
    bool reconstruct = false;

    int batch_size = 32;
    std::optional<double> learning_rate;  // unset: 0.005 for QD/QL, 0.001 for QN
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_epochs = 100;
    int patience = 10;
    std::uint64_t seed = 1;
    int moving_average_window = 25;

    bool shared_embedding = false;
    bool literal_eq3 = false;
    bool subsampled_trend = false;
    bool per_channel_heads = false;

    std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
    bool lookback_bridging = true;
    bool standardize = true;
    std::optional<std::string> date_column;

    std::vector<int> grid_m{1, 2, 4, 6, 8, 16, 32, 64, 128, 256, 512, 1024};

    double resolved_lr() const;
    ModelSpec model_spec() const;
    SplitSpec split_spec() const { return SplitSpec{split_ratios, lookback_bridging}; }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_mae = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;          // 1-based
    double best_val_mae = 0.0;   // == min over epochs of val_mae
    double wall_seconds = 0.0;
    long parameter_count = 0;
};

/// Adam moments; shapes mirror the parameter arrays.
struct AdamState {
    GradientSet m, v;
    long t = 0;

    static AdamState zeros_like(const ModelParams& params);
};

/// Standard bias-corrected Adam update, elementwise.
void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps);

/// Full optimization loop: per batch resample slots 1..M-1, forward all slots,
/// Eq-style multi-task loss, analytic backward, Adam step; per epoch validate
/// at slot 0 (level 0.5) and early-stop after `patience` epochs without
/// improvement. Returns the best-validation checkpoint. Deterministic given
/// (seed, config, data). Throws NumericalError on a non-finite loss.
std::pair<ModelParams, TrainReport> train_model(const TrainConfig& config,
                                                const TimeSeriesDataset& train_segment,
                                                const TimeSeriesDataset& val_segment);

struct GridEntry {
    int m = 0;
    double val_mae = 0.0;
    long parameter_count = 0;
    TrainReport report;
};

struct GridResult {
    int best_m = 0;
    double best_val_mae = 0.0;
    double test_mae = 0.0;  // test metrics are computed for the selected M only
    double test_mse = 0.0;
    std::vector<GridEntry> entries;
    ModelParams best_params;
};

/// Smallest M wins ties.
int pick_best_m(const std::vector<std::pair<int, double>>& val_by_m);

/// Trains one model per grid value with everything else (seed included) held
/// fixed, selects the M with minimal validation MAE at level 0.5, and reports
/// test metrics for the winner.
GridResult grid_search_m(const TrainConfig& base_config, std::vector<int> grid,
                         const SplitSegments& segments);

}  // namespace qlinear
