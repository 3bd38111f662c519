#pragma once

#include "qlinear/common.hpp"
#include "qlinear/quantile.hpp"

#include <random>
#include <string>
#include <vector>

namespace qlinear {

enum class Variant { QL, QD, QN };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// One linear map along the temporal axis: out = W^T * in + b,
/// W is in_len x out_len, b is out_len.
struct LinearHead {
    Matrix W;
    Vector b;

    LinearHead() = default;
    LinearHead(long in_len, long out_len) : W(Matrix::Zero(in_len, out_len)), b(Vector::Zero(out_len)) {}
};

/// One head shared across channels, or one head per channel.
struct HeadSet {
    std::vector<LinearHead> heads;  // size 1 (shared) or C

    bool per_channel() const { return heads.size() > 1; }
    const LinearHead& at(long c) const { return heads[heads.size() == 1 ? 0 : c]; }
    LinearHead& at(long c) { return heads[heads.size() == 1 ? 0 : c]; }
};

/// Variant-tagged shared forecasting heads plus the quantile slots. The same
/// head objects serve all M slots; there are no per-slot copies.
struct ModelParams {
    Variant variant = Variant::QN;
    long lookback = 336;
    long horizon = 96;
    long channels = 1;
    bool reconstruct = false;
    bool channel_sharing = true;    // false: one head per channel
    bool literal_eq3 = false;       // QN: subtract/re-add the raw last observation
    bool subsampled_trend = false;  // QD: trend head takes every w-th trend row
    int moving_average_window = 25;

    QuantileSlots slots;

    // QD: [0] = trend head, [1] = season head. QN/QL: [0] only.
    std::vector<HeadSet> head_sets;

    long out_len() const { return reconstruct ? lookback + horizon : horizon; }
    long trend_in_len() const { return subsampled_trend ? lookback / moving_average_window : lookback; }
    long head_count() const { return variant == Variant::QD ? 2 : 1; }
};

struct ModelSpec {
    Variant variant = Variant::QN;
    long lookback = 336;
    long horizon = 96;
    int m = 1;
    bool reconstruct = false;
    bool shared_embedding = false;
    bool literal_eq3 = false;
    bool subsampled_trend = false;
    bool per_channel_heads = false;
    int moving_average_window = 25;
};

/// Head weights ~ U[-1/sqrt(in_len), 1/sqrt(in_len)], biases zero, embedding
/// slots at (w=1, b=0) so alpha'_i == alpha_i at step 0.
ModelParams init_model(const ModelSpec& spec, long channels, std::mt19937_64& rng);

/// Exact count of learnable scalars, embedding slots included.
long param_count(const ModelParams& params);

/// out = W^T * in + b applied per channel.
Matrix apply_head_set(const HeadSet& set, const Matrix& in);

/// Full per-slot forward for a single window: add the embedded level, run the
/// variant preprocessing, then the shared heads. X is lookback x C; result out_len x C.
Matrix forward_one_slot(const ModelParams& params, const Matrix& x, double alpha_embedded);

/// All M slot forecasts for one window, through the same shared heads.
std::vector<Matrix> forward_all_slots(const ModelParams& params, const Matrix& x);

/// Forecast for an arbitrary quantile level, embedded through slot 0's
/// (equivalently the shared) trained parameters.
Matrix forward_at_level(const ModelParams& params, const Matrix& x, double level);

/// Alpha-independent pieces of a gathered batch forward. Every preprocessing
/// variant commutes with the scalar embedding shift, so slot i's forecast is
/// base + alpha'_i * corr (corr broadcast per window). Cached intermediates
/// feed the analytic backward pass.
struct BatchForward {
    Matrix base;      // out_len x (B*C): forecast of the embedding-free input
    Matrix corr;      // out_len x C: d(forecast)/d(alpha') per channel
    Matrix trend_in;  // QD only: trend-head input, alpha-free
    Matrix season;    // QD only
    Matrix normed;    // QN only: X minus its last row
    long n_windows = 0;
    long n_channels = 0;
};

/// inputs is lookback x (B*C) as produced by WindowStream::gather.
BatchForward forward_batch(const ModelParams& params, const Matrix& inputs, long n_windows);

/// y = base + alpha' * corr, tiled over the batch's windows.
Matrix slot_forecast(const BatchForward& bf, double alpha_embedded);

}  // namespace qlinear
