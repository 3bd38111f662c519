#include "qlinear/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace qlinear {

GradientSet GradientSet::zeros_like(const ModelParams& params) {
    GradientSet g;
    g.head_sets.resize(params.head_sets.size());
    for (size_t s = 0; s < params.head_sets.size(); ++s) {
        for (const auto& h : params.head_sets[s].heads) {
            GradientSet::HeadGrad hg;
            hg.W = Matrix::Zero(h.W.rows(), h.W.cols());
            hg.b = Vector::Zero(h.b.size());
            g.head_sets[s].push_back(std::move(hg));
        }
    }
    g.embed_w.assign(params.slots.embedding_count(), 0.0);
    g.embed_b.assign(params.slots.embedding_count(), 0.0);
    return g;
}

void GradientSet::set_zero() {
    for (auto& set : head_sets)
        for (auto& h : set) {
            h.W.setZero();
            h.b.setZero();
        }
    std::fill(embed_w.begin(), embed_w.end(), 0.0);
    std::fill(embed_b.begin(), embed_b.end(), 0.0);
}

namespace {

void check_slots(const QuantileSlots& slots) {
    if (slots.count() < 1) throw std::runtime_error("need at least one quantile slot");
    if (slots.levels[0] != 0.5)
        throw std::runtime_error("slot 0 must stay at level 0.5 (the main task)");
    for (double a : slots.levels)
        if (!(a > 0.0 && a < 1.0))
            throw std::runtime_error("quantile levels must lie strictly inside (0,1)");
}

}  // namespace

LossBreakdown multitask_loss(const Matrix& targets, const std::vector<Matrix>& forecasts,
                             const QuantileSlots& slots, long n_channels) {
    check_slots(slots);
    const int m = slots.count();
    if (static_cast<int>(forecasts.size()) != m)
        throw std::runtime_error("expected " + std::to_string(m) + " slot forecasts, got " +
                                 std::to_string(forecasts.size()));
    if (n_channels < 1 || targets.cols() % n_channels != 0)
        throw std::runtime_error("target columns must be a multiple of the channel count");

    const double elems = static_cast<double>(targets.size());
    const double norm = elems * 2.0;
    const double aux_weight = m > 1 ? 1.0 / (2.0 * (m - 1)) : 0.0;

    LossBreakdown out;
    out.per_slot.resize(m, 0.0);
    double aux_sum = 0.0;
    for (int i = 0; i < m; ++i) {
        const Matrix& y = forecasts[i];
        if (y.rows() != targets.rows() || y.cols() != targets.cols())
            throw std::runtime_error("forecast shape mismatch at slot " + std::to_string(i));
        const double alpha = slots.levels[i];
        double sum = 0.0;
        for (long k = 0; k < targets.cols(); ++k)
            for (long h = 0; h < targets.rows(); ++h) sum += pinball(targets(h, k), y(h, k), alpha);
        out.per_slot[i] = sum / elems;
        if (i == 0)
            out.main_term = sum / norm;
        else
            aux_sum += sum;
    }
    out.aux_term = aux_weight * aux_sum / norm;
    out.total = out.main_term + out.aux_term;
    return out;
}

LossBreakdown backward(const WindowBatch& batch, const ModelParams& params, GradientSet& grads) {
    check_slots(params.slots);
    const long c = params.channels;
    if (batch.n_channels != c)
        throw std::runtime_error("batch channel count does not match the model");
    const long b = batch.count();
    const long out_len = params.out_len();
    if (batch.targets.rows() != out_len)
        throw std::runtime_error("batch target length " + std::to_string(batch.targets.rows()) +
                                 " does not match model out_len " + std::to_string(out_len));
    if (batch.targets.cols() != b * c)
        throw std::runtime_error("batch target columns do not match windows * channels");

    const BatchForward bf = forward_batch(params, batch.inputs, b);

    grads.set_zero();
    const int m = params.slots.count();
    const double elems = static_cast<double>(b) * c * out_len;
    const double norm = elems * 2.0;
    const double aux_weight = m > 1 ? 1.0 / (2.0 * (m - 1)) : 0.0;

    Matrix delta_total = Matrix::Zero(out_len, b * c);  // summed per-slot loss gradients
    Matrix s_alpha = Matrix::Zero(out_len, c);          // sum_i alpha'_i * (per-channel delta sums)

    LossBreakdown loss;
    loss.per_slot.resize(m, 0.0);
    double aux_sum = 0.0;

    for (int i = 0; i < m; ++i) {
        const double level = params.slots.levels[i];
        const double alpha = params.slots.embedded(i);
        const double wi = i == 0 ? 1.0 : aux_weight;
        double slot_sum = 0.0;
        double g_alpha = 0.0;  // dL/d(alpha'_i)
        for (long k = 0; k < b * c; ++k) {
            const long cc = k % c;
            for (long h = 0; h < out_len; ++h) {
                const double y = batch.targets(h, k);
                const double yhat = bf.base(h, k) + alpha * bf.corr(h, cc);
                slot_sum += pinball(y, yhat, level);
                const double d = wi * pinball_grad(y, yhat, level) / norm;
                delta_total(h, k) += d;
                s_alpha(h, cc) += alpha * d;
                g_alpha += d * bf.corr(h, cc);
            }
        }
        loss.per_slot[i] = slot_sum / elems;
        if (i == 0)
            loss.main_term = slot_sum / norm;
        else
            aux_sum += slot_sum;
        if (params.slots.shared_embedding) {
            grads.embed_w[0] += g_alpha * level;
            grads.embed_b[0] += g_alpha;
        } else {
            grads.embed_w[i] = g_alpha * level;
            grads.embed_b[i] = g_alpha;
        }
    }
    loss.aux_term = aux_weight * aux_sum / norm;
    loss.total = loss.main_term + loss.aux_term;

    // Head gradients. The alpha shift reaches a head's input only where the
    // preprocessed input still carries it: QL always, QD's trend branch, and
    // QN's normed branch only when subtracting the raw last observation;
    // there it adds a rank-1 term constant across input rows.
    auto accumulate = [&](size_t set_idx, const Matrix& head_in, bool alpha_in_input) {
        auto& set_grads = grads.head_sets[set_idx];
        if (set_grads.size() == 1) {
            set_grads[0].W.noalias() = head_in * delta_total.transpose();
            if (alpha_in_input) {
                const RowVector s = s_alpha.rowwise().sum().transpose();
                set_grads[0].W.rowwise() += s;
            }
            set_grads[0].b = delta_total.rowwise().sum();
        } else {
            for (long ch = 0; ch < c; ++ch) {
                auto& hg = set_grads[ch];
                for (long j = 0; j < b; ++j) {
                    const long k = j * c + ch;
                    hg.W.noalias() += head_in.col(k) * delta_total.col(k).transpose();
                    hg.b += delta_total.col(k);
                }
                if (alpha_in_input) hg.W.rowwise() += s_alpha.col(ch).transpose();
            }
        }
    };

    switch (params.variant) {
        case Variant::QL:
            accumulate(0, batch.inputs, true);
            break;
        case Variant::QD:
            accumulate(0, bf.trend_in, true);
            accumulate(1, bf.season, false);
            break;
        case Variant::QN:
            accumulate(0, bf.normed, params.literal_eq3);
            break;
    }
    return loss;
}

}  // namespace qlinear
