#include "qlinear/model.hpp"

#include "qlinear/preprocess.hpp"

#include <stdexcept>

namespace qlinear {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::QL: return "ql";
        case Variant::QD: return "qd";
        case Variant::QN: return "qn";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "ql" || name == "qlinear") return Variant::QL;
    if (name == "qd" || name == "qdlinear") return Variant::QD;
    if (name == "qn" || name == "qnlinear") return Variant::QN;
    throw std::runtime_error("unknown variant '" + name + "' (expected ql, qd or qn)");
}

namespace {

// out = W^T * in + b, column k served by head k % C (or the single shared head).
Matrix apply_heads(const HeadSet& set, const Matrix& in, long n_channels) {
    const LinearHead& first = set.heads.front();
    if (first.W.rows() != in.rows())
        throw std::runtime_error("head input length " + std::to_string(first.W.rows()) +
                                 " does not match input rows " + std::to_string(in.rows()));
    if (!set.per_channel()) {
        Matrix out = first.W.transpose() * in;
        out.colwise() += first.b;
        return out;
    }
    Matrix out(first.W.cols(), in.cols());
    for (long k = 0; k < in.cols(); ++k) {
        const LinearHead& h = set.heads[k % n_channels];
        out.col(k) = h.W.transpose() * in.col(k) + h.b;
    }
    return out;
}

// d(forecast)/d(alpha') contributed through one head set: the column sums of W.
Matrix head_colsum_per_channel(const HeadSet& set, long n_channels) {
    const long out_len = set.heads.front().W.cols();
    Matrix corr(out_len, n_channels);
    if (!set.per_channel()) {
        const Vector cs = set.heads.front().W.colwise().sum().transpose();
        for (long c = 0; c < n_channels; ++c) corr.col(c) = cs;
    } else {
        for (long c = 0; c < n_channels; ++c)
            corr.col(c) = set.heads[c].W.colwise().sum().transpose();
    }
    return corr;
}

}  // namespace

ModelParams init_model(const ModelSpec& spec, long channels, std::mt19937_64& rng) {
    if (spec.lookback < 1 || spec.horizon < 1) throw std::runtime_error("lookback and horizon must be >= 1");
    if (spec.m < 1) throw std::runtime_error("m must be >= 1");
    if (channels < 1) throw std::runtime_error("channel count must be >= 1");
    if (spec.variant == Variant::QD &&
        (spec.moving_average_window < 1 || spec.moving_average_window > spec.lookback))
        throw std::runtime_error("moving_average_window must lie in [1, lookback]");

    ModelParams p;
    p.variant = spec.variant;
    p.lookback = spec.lookback;
    p.horizon = spec.horizon;
    p.channels = channels;
    p.reconstruct = spec.reconstruct;
    p.channel_sharing = !spec.per_channel_heads;
    p.literal_eq3 = spec.literal_eq3;
    p.subsampled_trend = spec.subsampled_trend;
    p.moving_average_window = spec.moving_average_window;
    p.slots = QuantileSlots::create(spec.m, spec.shared_embedding);

    const long n_heads = spec.per_channel_heads ? channels : 1;
    const long out = p.out_len();
    auto make_set = [&](long in_len) {
        const double k = 1.0 / std::sqrt(static_cast<double>(in_len));
        HeadSet set;
        for (long h = 0; h < n_heads; ++h) {
            LinearHead head(in_len, out);
            for (long j = 0; j < out; ++j)
                for (long i = 0; i < in_len; ++i)
                    head.W(i, j) = (2.0 * uniform_open(rng) - 1.0) * k;
            set.heads.push_back(std::move(head));
        }
        return set;
    };

    if (p.variant == Variant::QD) {
        if (p.trend_in_len() < 1) throw std::runtime_error("lookback / moving_average_window must be >= 1");
        p.head_sets.push_back(make_set(p.trend_in_len()));
        p.head_sets.push_back(make_set(p.lookback));
    } else {
        p.head_sets.push_back(make_set(p.lookback));
    }
    return p;
}

long param_count(const ModelParams& params) {
    long n = 0;
    for (const auto& set : params.head_sets)
        for (const auto& h : set.heads) n += h.W.size() + h.b.size();
    return n + 2 * params.slots.embedding_count();
}

Matrix apply_head_set(const HeadSet& set, const Matrix& in) {
    return apply_heads(set, in, in.cols());
}

Matrix forward_one_slot(const ModelParams& params, const Matrix& x, double alpha_embedded) {
    if (x.rows() != params.lookback)
        throw std::runtime_error("input has " + std::to_string(x.rows()) + " rows, expected lookback = " +
                                 std::to_string(params.lookback));
    if (x.cols() != params.channels)
        throw std::runtime_error("input has " + std::to_string(x.cols()) +
                                 " channels, model expects " + std::to_string(params.channels));
    const Matrix z = add_embedding(x, alpha_embedded);
    switch (params.variant) {
        case Variant::QL:
            return apply_heads(params.head_sets[0], z, params.channels);
        case Variant::QD: {
            Decomposition d = decompose(z, params.moving_average_window);
            const Matrix tin = params.subsampled_trend
                                   ? subsample_rows(d.trend, params.moving_average_window)
                                   : d.trend;
            return apply_heads(params.head_sets[0], tin, params.channels) +
                   apply_heads(params.head_sets[1], d.season, params.channels);
        }
        case Variant::QN: {
            const RowVector ref =
                params.literal_eq3 ? RowVector(x.row(params.lookback - 1)) : RowVector(z.row(params.lookback - 1));
            Normalization n = normalize_against(z, ref);
            Matrix out = apply_heads(params.head_sets[0], n.normed, params.channels);
            out.rowwise() += n.last;  // re-add exactly what was subtracted
            return out;
        }
    }
    throw std::logic_error("unreachable variant");
}

std::vector<Matrix> forward_all_slots(const ModelParams& params, const Matrix& x) {
    std::vector<Matrix> out;
    out.reserve(params.slots.count());
    for (int i = 0; i < params.slots.count(); ++i)
        out.push_back(forward_one_slot(params, x, params.slots.embedded(i)));
    return out;
}

Matrix forward_at_level(const ModelParams& params, const Matrix& x, double level) {
    return forward_one_slot(params, x,
                            embed_level(level, params.slots.weight(0), params.slots.bias(0)));
}

BatchForward forward_batch(const ModelParams& params, const Matrix& inputs, long n_windows) {
    const long c = params.channels;
    if (inputs.rows() != params.lookback || inputs.cols() != n_windows * c)
        throw std::runtime_error("batch inputs must be lookback x (windows * channels)");

    BatchForward bf;
    bf.n_windows = n_windows;
    bf.n_channels = c;
    switch (params.variant) {
        case Variant::QL: {
            bf.base = apply_heads(params.head_sets[0], inputs, c);
            bf.corr = head_colsum_per_channel(params.head_sets[0], c);
            break;
        }
        case Variant::QD: {
            Matrix trend = moving_average(inputs, params.moving_average_window);
            bf.season = inputs - trend;
            bf.trend_in = params.subsampled_trend
                              ? subsample_rows(trend, params.moving_average_window)
                              : std::move(trend);
            bf.base = apply_heads(params.head_sets[0], bf.trend_in, c) +
                      apply_heads(params.head_sets[1], bf.season, c);
            bf.corr = head_colsum_per_channel(params.head_sets[0], c);
            break;
        }
        case Variant::QN: {
            bf.normed = inputs;
            const long last = params.lookback - 1;
            for (long k = 0; k < inputs.cols(); ++k)
                bf.normed.col(k).array() -= inputs(last, k);
            bf.base = apply_heads(params.head_sets[0], bf.normed, c);
            for (long k = 0; k < bf.base.cols(); ++k)
                bf.base.col(k).array() += inputs(last, k);
            bf.corr = params.literal_eq3 ? head_colsum_per_channel(params.head_sets[0], c)
                                         : Matrix::Ones(params.out_len(), c);
            break;
        }
    }
    return bf;
}

Matrix slot_forecast(const BatchForward& bf, double alpha_embedded) {
    Matrix y = bf.base;
    const long c = bf.n_channels;
    for (long j = 0; j < bf.n_windows; ++j)
        for (long ch = 0; ch < c; ++ch) y.col(j * c + ch) += alpha_embedded * bf.corr.col(ch);
    return y;
}

}  // namespace qlinear
