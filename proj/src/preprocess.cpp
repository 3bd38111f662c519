#include "qlinear/preprocess.hpp"

#include <stdexcept>
#include <string>

namespace qlinear {

Matrix add_embedding(const Matrix& x, double alpha_embedded) {
    return x.array() + alpha_embedded;
}

Matrix moving_average(const Matrix& z, int w) {
    const long rows = z.rows(), cols = z.cols();
    if (w < 1 || w > rows)
        throw std::invalid_argument("moving average kernel w=" + std::to_string(w) +
                                    " out of range [1, " + std::to_string(rows) + "]");
    if (w == 1) return z;

    const long front = (w - 1) / 2;  // replicated first rows
    Matrix out(rows, cols);
    for (long c = 0; c < cols; ++c) {
        const auto col = z.col(c);
        for (long t = 0; t < rows; ++t) {
            double sum = 0.0;
            for (long k = t - front; k < t - front + w; ++k) {
                const long idx = k < 0 ? 0 : (k >= rows ? rows - 1 : k);
                sum += col(idx);
            }
            out(t, c) = sum / static_cast<double>(w);
        }
    }
    return out;
}

Decomposition decompose(const Matrix& z, int w) {
    Decomposition d;
    d.trend = moving_average(z, w);
    d.season = z - d.trend;
    return d;
}

Normalization normalize_last(const Matrix& z) {
    Normalization n;
    n.last = z.row(z.rows() - 1);
    n.normed = z;
    n.normed.rowwise() -= n.last;
    return n;
}

Normalization normalize_against(const Matrix& z, const RowVector& ref) {
    if (ref.size() != z.cols())
        throw std::invalid_argument("normalization reference row has wrong channel count");
    Normalization n;
    n.last = ref;
    n.normed = z;
    n.normed.rowwise() -= ref;
    return n;
}

Matrix subsample_rows(const Matrix& m, int stride) {
    if (stride < 1) throw std::invalid_argument("subsample stride must be >= 1");
    const long n = m.rows() / stride;
    if (n < 1) throw std::invalid_argument("subsample stride larger than row count");
    Matrix out(n, m.cols());
    for (long i = 0; i < n; ++i) out.row(i) = m.row(i * stride);
    return out;
}

}  // namespace qlinear
