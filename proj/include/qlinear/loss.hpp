#pragma once

#include "qlinear/common.hpp"
#include "qlinear/dataset.hpp"
#include "qlinear/model.hpp"

#include <vector>

namespace qlinear {

/// rho_alpha(y, yhat) = (y - yhat) * (alpha - 1[y <= yhat]).
inline double pinball(double y, double yhat, double alpha) {
    const double d = y - yhat;
    return d >= 0.0 ? alpha * d : (alpha - 1.0) * d;
}

/// Subgradient d rho / d yhat with the indicator convention 1[y <= yhat],
/// i.e. the lower-branch value (1 - alpha) at a zero residual.
inline double pinball_grad(double y, double yhat, double alpha) {
    return (y <= yhat ? 1.0 : 0.0) - alpha;
}

struct LossBreakdown {
    double total = 0.0;      // main_term + aux_term
    double main_term = 0.0;  // alpha = 0.5 component, normalized
    double aux_term = 0.0;   // auxiliary slots, weighted by 1/(2(M-1)), normalized
    std::vector<double> per_slot;  // unweighted mean pinball per slot
};

/// Weighted multi-task objective over M slot forecasts:
///   [ sum rho_0.5(y, yhat_0) + 1/(2(M-1)) * sum_{i>=1} sum rho_{a_i}(y, yhat_i) ]
///   / (B * C * out_len * 2).
/// At M == 1 the auxiliary term is identically zero. Targets and forecasts
/// are out_len x (B*C) column-block matrices.
LossBreakdown multitask_loss(const Matrix& targets, const std::vector<Matrix>& forecasts,
                             const QuantileSlots& slots, long n_channels);

/// One gradient array per parameter array in ModelParams, matching shapes.
struct GradientSet {
    struct HeadGrad {
        Matrix W;
        Vector b;
    };
    std::vector<std::vector<HeadGrad>> head_sets;  // [set][channel or 0]
    std::vector<double> embed_w;                   // size M, or 1 when shared
    std::vector<double> embed_b;

    static GradientSet zeros_like(const ModelParams& params);
    void set_zero();
};

/// Forward + exact analytic subgradient of the multi-task loss for one batch.
/// Head gradients flow through all M slots; slot i's embedding pair only
/// through slot i's forecast. Returns the loss breakdown.
LossBreakdown backward(const WindowBatch& batch, const ModelParams& params, GradientSet& grads);

}  // namespace qlinear
