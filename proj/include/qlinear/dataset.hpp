#pragma once

#include "qlinear/common.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace qlinear {

/// A multivariate series: L timesteps (rows) x C channels (columns), fully
/// observed at a regular frequency. Read-only after construction.
struct TimeSeriesDataset {
    Matrix values;                            // L x C
    std::vector<std::string> channel_names;   // size C
    std::string frequency;                    // informational only
    std::vector<std::string> timestamps;      // empty when the file had no date column

    long rows() const { return values.rows(); }
    long channels() const { return values.cols(); }

    /// Contiguous row slice [start, start+len), metadata preserved.
    TimeSeriesDataset slice(long start, long len) const;
};

/// Per-channel z-score parameters, fitted on the train split only.
struct ChannelStats {
    Vector mean;
    Vector std_dev;   // population convention, strictly positive
    std::vector<std::string> channel_names;

    static ChannelStats identity(long channels);
};

struct SplitSpec {
    std::array<double, 3> ratios{0.6, 0.2, 0.2};  // train : val : test, summing to 1
    bool lookback_bridging = true;
};

struct DataSplits {
    TimeSeriesDataset train, val, test;
};

/// Segments prepared for windowing. With lookback bridging, val/test include
/// the preceding lookback rows as input context; their windows' targets still lie
/// strictly inside the owning split.
struct SplitSegments {
    TimeSeriesDataset train, val, test;
    std::array<long, 3> sizes;     // raw partition lengths
    std::array<long, 3> contexts;  // leading context rows in {train,val,test}
};

/// Loads a CSV with a header row. A leading date column (named `date_column`,
/// or auto-detected by header "date" / a non-numeric first cell) is kept as
/// timestamps and excluded from the value matrix. Any other non-numeric cell
/// is an error naming its file line and column.
TimeSeriesDataset load_csv(const std::string& path,
                           const std::optional<std::string>& date_column = std::nullopt);

/// Floor-divided split boundaries; remainder rows go to the test split.
std::array<long, 3> split_sizes(long rows, const SplitSpec& spec);

/// Contiguous, ordered, non-overlapping partitions by raw row index.
DataSplits chronological_split(const TimeSeriesDataset& ds, const SplitSpec& spec);

/// Split plus bridged context, validated to yield at least one window each.
SplitSegments windowing_segments(const TimeSeriesDataset& ds, const SplitSpec& spec,
                                 long lookback, long horizon);

ChannelStats fit_standardizer(const TimeSeriesDataset& train);
TimeSeriesDataset apply_standardizer(const TimeSeriesDataset& ds, const ChannelStats& stats);
TimeSeriesDataset invert_standardizer(const TimeSeriesDataset& ds, const ChannelStats& stats);

/// Flat key/value text format, full double precision, exact round-trip.
void save_stats(const ChannelStats& stats, const std::string& path);
ChannelStats load_stats(const std::string& path);

/// A batch of windows stored as column blocks: window b's channel c lives in
/// column b*C + c. inputs is lookback x (B*C); targets is target_len x (B*C).
struct WindowBatch {
    Matrix inputs;
    Matrix targets;
    std::vector<long> window_start_indices;
    long n_channels = 0;

    long count() const { return static_cast<long>(window_start_indices.size()); }
    auto input(long b) const { return inputs.middleCols(b * n_channels, n_channels); }
    auto target(long b) const { return targets.middleCols(b * n_channels, n_channels); }
};

/// Deterministic, order-stable window iteration over one segment. A window at
/// start s has input rows [s, s+lookback) and target rows [s+lookback, s+lookback+H), or
/// [s, s+lookback+H) when reconstructing. Holds a reference to the segment.
class WindowStream {
public:
    WindowStream(const TimeSeriesDataset& segment, long lookback, long horizon,
                 bool reconstruct, long stride = 1);

    long count() const { return count_; }
    long input_len() const { return lookback_; }
    long target_len() const { return reconstruct_ ? lookback_ + horizon_ : horizon_; }
    long horizon() const { return horizon_; }
    long channels() const { return values_->cols(); }
    bool reconstruct() const { return reconstruct_; }

    /// Gathers the windows with the given indices, in the given order.
    WindowBatch gather(const std::vector<long>& ids) const;
    /// Gathers windows [first, first+n) in index order.
    WindowBatch batch(long first, long n) const;

private:
    const Matrix* values_;
    long lookback_, horizon_, stride_, count_;
    bool reconstruct_;
};

WindowStream make_windows(const TimeSeriesDataset& ds, long lookback, long horizon,
                          bool reconstruct, long stride = 1);

}  // namespace qlinear
