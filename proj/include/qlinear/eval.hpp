#pragma once

#include "qlinear/common.hpp"
#include "qlinear/dataset.hpp"
#include "qlinear/model.hpp"

#include <vector>

namespace qlinear {

/// Elementwise means over two same-shape matrices.
double mae(const Matrix& targets, const Matrix& forecasts);
double mse(const Matrix& targets, const Matrix& forecasts);

/// Fraction of target elements with y <= yhat (ties count as covered).
double coverage(const Matrix& targets, const Matrix& forecasts);

struct EvalMetrics {
    double mae = 0.0;
    double mse = 0.0;
    long windows = 0;
};

/// Median-forecast metrics over every window of a segment, forecast range
/// only (reconstruction steps are never included in reported metrics).
/// Accumulation order is per-window, so results do not depend on batching.
EvalMetrics evaluate_median(const ModelParams& params, const TimeSeriesDataset& segment,
                            long eval_batch = 256);

/// Mean pinball loss at each requested level, querying the model through the
/// slot-0 / shared embedding parameters.
std::vector<double> per_level_pinball(const ModelParams& params, const TimeSeriesDataset& segment,
                                      const std::vector<double>& levels, long eval_batch = 256);

/// Empirical coverage of the level-alpha forecast over a segment.
double coverage_at_level(const ModelParams& params, const TimeSeriesDataset& segment,
                         double level, long eval_batch = 256);

/// Fraction of forecast elements where the lower-level forecast exceeds the
/// higher-level one. Nothing in the method prevents crossing; this is a
/// reported diagnostic only.
double crossing_rate(const ModelParams& params, const TimeSeriesDataset& segment,
                     double lo_level, double hi_level, long eval_batch = 256);

/// Repeat heuristic: every horizon forecast equals the last observed value.
Matrix repeat_baseline(const Matrix& x, long horizon);

/// Repeat-forecast metrics over every window of a segment.
EvalMetrics repeat_metrics(const TimeSeriesDataset& segment, long lookback, long horizon);

}  // namespace qlinear
