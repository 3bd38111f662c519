#pragma once

#include "qlinear/common.hpp"

namespace qlinear {

/// Z = X + alpha' (scalar broadcast over all timesteps and channels).
Matrix add_embedding(const Matrix& x, double alpha_embedded);

/// Same-length moving average per channel. The series is replicate-padded
/// with floor((w-1)/2) copies of the first row in front and ceil((w-1)/2)
/// copies of the last row behind before averaging.
Matrix moving_average(const Matrix& z, int w);

struct Decomposition {
    Matrix trend;   // moving average
    Matrix season;  // z - trend
};
Decomposition decompose(const Matrix& z, int w);

struct Normalization {
    Matrix normed;   // z - ref (last row of normed is zero when ref is z's own)
    RowVector last;  // the subtracted row, re-added to the forecast
};
/// Subtracts z's own last row (which carries the quantile embedding).
Normalization normalize_last(const Matrix& z);
/// Subtracts an externally supplied reference row (the literal reading:
/// the raw last observation, without the embedding).
Normalization normalize_against(const Matrix& z, const RowVector& ref);

/// Rows 0, stride, 2*stride, ...; floor(rows/stride) of them.
Matrix subsample_rows(const Matrix& m, int stride);

}  // namespace qlinear
