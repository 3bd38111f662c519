#include "qlinear/eval.hpp"

#include "qlinear/quantile.hpp"

#include <cmath>
#include <stdexcept>

namespace qlinear {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::runtime_error("shape mismatch: " + std::to_string(a.rows()) + "x" +
                                 std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                 "x" + std::to_string(b.cols()));
}

// Walks a segment in window order and hands each window's forecast-range
// forecast/target pair to the sink. Accumulation done by the caller stays
// per-window ordered, so results are independent of the batch size.
template <class Sink>
void for_each_window(const ModelParams& params, const TimeSeriesDataset& segment,
                     double alpha_embedded, long eval_batch, Sink&& sink) {
    const WindowStream ws(segment, params.lookback, params.horizon, false);
    const long c = params.channels;
    if (segment.channels() != c)
        throw std::runtime_error("segment channel count does not match the model");
    for (long first = 0; first < ws.count(); first += eval_batch) {
        const long n = std::min<long>(eval_batch, ws.count() - first);
        const WindowBatch batch = ws.batch(first, n);
        const BatchForward bf = forward_batch(params, batch.inputs, n);
        const Matrix y = slot_forecast(bf, alpha_embedded);
        const long h0 = params.out_len() - params.horizon;  // skip reconstruction rows
        for (long j = 0; j < n; ++j)
            sink(batch.targets.middleCols(j * c, c),
                 y.block(h0, j * c, params.horizon, c));
    }
}

}  // namespace

double mae(const Matrix& targets, const Matrix& forecasts) {
    check_same_shape(targets, forecasts);
    return (targets - forecasts).array().abs().sum() / static_cast<double>(targets.size());
}

double mse(const Matrix& targets, const Matrix& forecasts) {
    check_same_shape(targets, forecasts);
    return (targets - forecasts).array().square().sum() / static_cast<double>(targets.size());
}

double coverage(const Matrix& targets, const Matrix& forecasts) {
    check_same_shape(targets, forecasts);
    long covered = 0;
    for (long k = 0; k < targets.cols(); ++k)
        for (long h = 0; h < targets.rows(); ++h)
            if (targets(h, k) <= forecasts(h, k)) ++covered;
    return static_cast<double>(covered) / static_cast<double>(targets.size());
}

EvalMetrics evaluate_median(const ModelParams& params, const TimeSeriesDataset& segment,
                            long eval_batch) {
    double abs_sum = 0.0, sq_sum = 0.0;
    long windows = 0;
    for_each_window(params, segment, params.slots.embedded(0), eval_batch,
                    [&](const auto& target, const auto& forecast) {
                        for (long ch = 0; ch < target.cols(); ++ch)
                            for (long h = 0; h < target.rows(); ++h) {
                                const double d = target(h, ch) - forecast(h, ch);
                                abs_sum += std::abs(d);
                                sq_sum += d * d;
                            }
                        ++windows;
                    });
    const double elems = static_cast<double>(windows) * params.horizon * params.channels;
    return EvalMetrics{abs_sum / elems, sq_sum / elems, windows};
}

std::vector<double> per_level_pinball(const ModelParams& params, const TimeSeriesDataset& segment,
                                      const std::vector<double>& levels, long eval_batch) {
    std::vector<double> out;
    out.reserve(levels.size());
    for (double level : levels) {
        if (!(level > 0.0 && level < 1.0))
            throw std::runtime_error("pinball level must lie in (0,1)");
        const double alpha = embed_level(level, params.slots.weight(0), params.slots.bias(0));
        double sum = 0.0;
        long windows = 0;
        for_each_window(params, segment, alpha, eval_batch,
                        [&](const auto& target, const auto& forecast) {
                            for (long ch = 0; ch < target.cols(); ++ch)
                                for (long h = 0; h < target.rows(); ++h) {
                                    const double d = target(h, ch) - forecast(h, ch);
                                    sum += d >= 0.0 ? level * d : (level - 1.0) * d;
                                }
                            ++windows;
                        });
        out.push_back(sum / (static_cast<double>(windows) * params.horizon * params.channels));
    }
    return out;
}

double coverage_at_level(const ModelParams& params, const TimeSeriesDataset& segment,
                         double level, long eval_batch) {
    const double alpha = embed_level(level, params.slots.weight(0), params.slots.bias(0));
    long covered = 0, total = 0;
    for_each_window(params, segment, alpha, eval_batch,
                    [&](const auto& target, const auto& forecast) {
                        for (long ch = 0; ch < target.cols(); ++ch)
                            for (long h = 0; h < target.rows(); ++h) {
                                if (target(h, ch) <= forecast(h, ch)) ++covered;
                                ++total;
                            }
                    });
    return static_cast<double>(covered) / static_cast<double>(total);
}

double crossing_rate(const ModelParams& params, const TimeSeriesDataset& segment,
                     double lo_level, double hi_level, long eval_batch) {
    if (!(lo_level < hi_level)) throw std::runtime_error("crossing_rate needs lo_level < hi_level");
    const double a_lo = embed_level(lo_level, params.slots.weight(0), params.slots.bias(0));
    const double a_hi = embed_level(hi_level, params.slots.weight(0), params.slots.bias(0));
    const WindowStream ws(segment, params.lookback, params.horizon, false);
    long crossed = 0, total = 0;
    for (long first = 0; first < ws.count(); first += eval_batch) {
        const long n = std::min<long>(eval_batch, ws.count() - first);
        const WindowBatch batch = ws.batch(first, n);
        const BatchForward bf = forward_batch(params, batch.inputs, n);
        const Matrix y_lo = slot_forecast(bf, a_lo);
        const Matrix y_hi = slot_forecast(bf, a_hi);
        for (long k = 0; k < y_lo.cols(); ++k)
            for (long h = 0; h < y_lo.rows(); ++h) {
                if (y_lo(h, k) > y_hi(h, k)) ++crossed;
                ++total;
            }
    }
    return static_cast<double>(crossed) / static_cast<double>(total);
}

Matrix repeat_baseline(const Matrix& x, long horizon) {
    if (x.rows() < 1) throw std::runtime_error("repeat baseline needs at least one input row");
    Matrix y(horizon, x.cols());
    y.rowwise() = x.row(x.rows() - 1);
    return y;
}

EvalMetrics repeat_metrics(const TimeSeriesDataset& segment, long lookback, long horizon) {
    const WindowStream ws(segment, lookback, horizon, false);
    const long c = segment.channels();
    double abs_sum = 0.0, sq_sum = 0.0;
    for (long first = 0; first < ws.count(); first += 1024) {
        const long n = std::min<long>(1024, ws.count() - first);
        const WindowBatch batch = ws.batch(first, n);
        for (long j = 0; j < n; ++j) {
            const auto target = batch.targets.middleCols(j * c, c);
            const auto last = batch.inputs.row(lookback - 1).segment(j * c, c);
            for (long ch = 0; ch < c; ++ch)
                for (long h = 0; h < horizon; ++h) {
                    const double d = target(h, ch) - last(ch);
                    abs_sum += std::abs(d);
                    sq_sum += d * d;
                }
        }
    }
    const double elems = static_cast<double>(ws.count()) * horizon * c;
    return EvalMetrics{abs_sum / elems, sq_sum / elems, ws.count()};
}

}  // namespace qlinear
