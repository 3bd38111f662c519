#include "qlinear/train.hpp"

#include "qlinear/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace qlinear {

double TrainConfig::resolved_lr() const {
    if (learning_rate) return *learning_rate;
    return variant == Variant::QN ? 0.001 : 0.005;
}

ModelSpec TrainConfig::model_spec() const {
    ModelSpec s;
    s.variant = variant;
    s.lookback = lookback;
    s.horizon = horizon;
    s.m = m;
    s.reconstruct = reconstruct;
    s.shared_embedding = shared_embedding;
    s.literal_eq3 = literal_eq3;
    s.subsampled_trend = subsampled_trend;
    s.per_channel_heads = per_channel_heads;
    s.moving_average_window = moving_average_window;
    return s;
}

AdamState AdamState::zeros_like(const ModelParams& params) {
    AdamState s;
    s.m = GradientSet::zeros_like(params);
    s.v = GradientSet::zeros_like(params);
    s.t = 0;
    return s;
}

namespace {

template <class Arr>
void adam_update(Arr& theta, const Arr& g, Arr& m, Arr& v,
                 double lr, double b1, double b2, double eps, double c1, double c2) {
    m = b1 * m + (1.0 - b1) * g;
    v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void adam_update_scalar(double& theta, double g, double& m, double& v,
                        double lr, double b1, double b2, double eps, double c1, double c2) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    theta -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
}

// Fisher-Yates with explicit index draws: std::shuffle's permutation is
// implementation-defined, and checkpoints should reproduce across toolchains.
void shuffle_order(std::vector<long>& order, std::mt19937_64& rng) {
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng() % i]);
}

}  // namespace

void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (grads.head_sets.size() != params.head_sets.size())
        throw std::runtime_error("gradient/parameter structure mismatch");
    state.t += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));

    for (size_t s = 0; s < params.head_sets.size(); ++s) {
        auto& heads = params.head_sets[s].heads;
        if (grads.head_sets[s].size() != heads.size())
            throw std::runtime_error("gradient/parameter head count mismatch");
        for (size_t h = 0; h < heads.size(); ++h) {
            const auto& g = grads.head_sets[s][h];
            auto& ms = state.m.head_sets[s][h];
            auto& vs = state.v.head_sets[s][h];
            if (g.W.rows() != heads[h].W.rows() || g.W.cols() != heads[h].W.cols())
                throw std::runtime_error("gradient shape mismatch");
            adam_update(heads[h].W, g.W, ms.W, vs.W, lr, beta1, beta2, eps, c1, c2);
            adam_update(heads[h].b, g.b, ms.b, vs.b, lr, beta1, beta2, eps, c1, c2);
        }
    }
    auto& slots = params.slots;
    for (int i = 0; i < slots.embedding_count(); ++i) {
        adam_update_scalar(slots.weights[i], grads.embed_w[i], state.m.embed_w[i],
                           state.v.embed_w[i], lr, beta1, beta2, eps, c1, c2);
        adam_update_scalar(slots.biases[i], grads.embed_b[i], state.m.embed_b[i],
                           state.v.embed_b[i], lr, beta1, beta2, eps, c1, c2);
    }
}

std::pair<ModelParams, TrainReport> train_model(const TrainConfig& config,
                                                const TimeSeriesDataset& train_segment,
                                                const TimeSeriesDataset& val_segment) {
    if (config.max_epochs < 1) throw std::runtime_error("max_epochs must be >= 1");
    if (config.batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
    if (train_segment.channels() != val_segment.channels())
        throw std::runtime_error("train/val channel counts differ");

    const WindowStream train_ws(train_segment, config.lookback, config.horizon, config.reconstruct);
    // Fail fast when the validation segment cannot yield a single window;
    // per-epoch scoring happens on the forecast range at slot 0.
    const WindowStream val_check(val_segment, config.lookback, config.horizon, false);
    (void)val_check;

    // Weight init, slot sampling and epoch shuffling use decoupled streams so
    // changing M never perturbs the initialization.
    std::mt19937_64 init_rng(config.seed);
    std::mt19937_64 sample_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::mt19937_64 shuffle_rng(config.seed ^ 0xC2B2AE3D27D4EB4FULL);

    ModelParams params = init_model(config.model_spec(), train_segment.channels(), init_rng);
    AdamState adam = AdamState::zeros_like(params);
    GradientSet grads = GradientSet::zeros_like(params);
    const double lr = config.resolved_lr();

    std::vector<long> order(train_ws.count());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    report.parameter_count = param_count(params);
    ModelParams best = params;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int since_best = 0;

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto e0 = std::chrono::steady_clock::now();
        shuffle_order(order, shuffle_rng);

        double loss_weighted = 0.0;
        long windows_seen = 0;
        for (long first = 0; first < train_ws.count(); first += config.batch_size) {
            const long n = std::min<long>(config.batch_size, train_ws.count() - first);
            std::vector<long> ids(order.begin() + first, order.begin() + first + n);
            params.slots.resample(sample_rng);
            const WindowBatch batch = train_ws.gather(ids);
            const LossBreakdown lb = backward(batch, params, grads);
            if (!std::isfinite(lb.total))
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) +
                                     ", batch starting at window " + std::to_string(first));
            adam_step(params, grads, adam, lr, config.beta1, config.beta2, config.epsilon);
            loss_weighted += lb.total * static_cast<double>(n);
            windows_seen += n;
        }

        const EvalMetrics val = evaluate_median(params, val_segment);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
        report.epochs.push_back(EpochRecord{epoch, loss_weighted / static_cast<double>(windows_seen),
                                            val.mae, secs});

        if (val.mae < best_val) {
            best_val = val.mae;
            best = params;
            best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= config.patience) break;
        }
    }

    report.best_epoch = best_epoch;
    report.best_val_mae = best_val;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(best), std::move(report)};
}

int pick_best_m(const std::vector<std::pair<int, double>>& val_by_m) {
    if (val_by_m.empty()) throw std::runtime_error("empty grid");
    int best_m = val_by_m.front().first;
    double best_val = val_by_m.front().second;
    for (const auto& [m, val] : val_by_m) {
        if (val < best_val || (val == best_val && m < best_m)) {
            best_val = val;
            best_m = m;
        }
    }
    return best_m;
}

GridResult grid_search_m(const TrainConfig& base_config, std::vector<int> grid,
                         const SplitSegments& segments) {
    if (grid.empty()) throw std::runtime_error("empty grid");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    GridResult result;
    std::vector<std::pair<int, double>> val_by_m;
    std::vector<ModelParams> trained;  // kept so the winner needs no retraining
    for (int m : grid) {
        TrainConfig cfg = base_config;
        cfg.m = m;
        auto [params, report] = train_model(cfg, segments.train, segments.val);
        val_by_m.emplace_back(m, report.best_val_mae);
        result.entries.push_back(
            GridEntry{m, report.best_val_mae, report.parameter_count, std::move(report)});
        trained.push_back(std::move(params));
    }

    result.best_m = pick_best_m(val_by_m);
    for (size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] == result.best_m) {
            result.best_params = std::move(trained[i]);
            result.best_val_mae = val_by_m[i].second;
        }
    }
    const EvalMetrics test = evaluate_median(result.best_params, segments.test);
    result.test_mae = test.mae;
    result.test_mse = test.mse;
    return result;
}

}  // namespace qlinear
