#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qlinear/preprocess.hpp"
#include "util.hpp"

#include <cmath>
#include <vector>

using namespace qlinear;

namespace {

// Brute-force oracle: materialize the replicate-padded column, then average
// each length-w slice front to back.
Matrix padded_convolution_oracle(const Matrix& z, int w) {
    const long rows = z.rows();
    const long front = (w - 1) / 2;
    const long back = w - 1 - front;
    Matrix out(rows, z.cols());
    for (long c = 0; c < z.cols(); ++c) {
        std::vector<double> padded;
        for (long i = 0; i < front; ++i) padded.push_back(z(0, c));
        for (long t = 0; t < rows; ++t) padded.push_back(z(t, c));
        for (long i = 0; i < back; ++i) padded.push_back(z(rows - 1, c));
        for (long t = 0; t < rows; ++t) {
            double s = 0.0;
            for (int k = 0; k < w; ++k) s += padded[t + k];
            out(t, c) = s / w;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("add_embedding broadcasts the scalar") {
    Matrix x(1, 2);
    x << 1.0, 2.0;
    CHECK(add_embedding(x, 0.0) == x);
    const Matrix z = add_embedding(x, 0.5);
    CHECK(z(0, 0) == 1.5);
    CHECK(z(0, 1) == 2.5);

    const Matrix r = qltest::random_matrix(7, 3, 31);
    const Matrix shifted = add_embedding(r, 0.37);
    for (long c = 0; c < 3; ++c)
        for (long t = 0; t < 7; ++t) {
            CHECK(shifted(t, c) == r(t, c) + 0.37);  // the same single addition
            CHECK(shifted(t, c) - r(t, c) == doctest::Approx(0.37).epsilon(1e-15));
        }
}

TEST_CASE("moving_average with w=1 is the identity") {
    const Matrix z = qltest::random_matrix(9, 2, 32);
    CHECK(moving_average(z, 1) == z);
}

TEST_CASE("moving_average matches the padded-convolution oracle") {
    Matrix z(4, 1);
    z << 1.0, 2.0, 3.0, 4.0;
    const Matrix got = moving_average(z, 3);
    const Matrix oracle = padded_convolution_oracle(z, 3);
    CHECK(got == oracle);
    CHECK(got(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(got(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(got(2, 0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(got(3, 0) == doctest::Approx(11.0 / 3.0).epsilon(1e-15));

    // Even kernels pad asymmetrically: floor((w-1)/2) in front.
    const Matrix even = moving_average(z, 2);
    CHECK(even == padded_convolution_oracle(z, 2));
    CHECK(even(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(even(3, 0) == doctest::Approx(4.0).epsilon(1e-15));

    for (int w : {1, 2, 3, 4, 5, 7, 8}) {
        const Matrix r = qltest::random_matrix(8, 3, 33 + w);
        CHECK(moving_average(r, w) == padded_convolution_oracle(r, w));
    }
}

TEST_CASE("moving_average of a constant series is unchanged") {
    Matrix z = Matrix::Constant(10, 2, 0.1);
    const Matrix t = moving_average(z, 4);
    for (long c = 0; c < 2; ++c)
        for (long r = 0; r < 10; ++r) CHECK(t(r, c) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("moving_average is linear and bounded by the input range") {
    const Matrix a = qltest::random_matrix(12, 2, 34), b = qltest::random_matrix(12, 2, 35);
    const Matrix lhs = moving_average(2.5 * a - 1.25 * b, 5);
    const Matrix rhs = 2.5 * moving_average(a, 5) - 1.25 * moving_average(b, 5);
    CHECK(((lhs - rhs).array().abs() < 1e-12).all());

    const Matrix t = moving_average(a, 5);
    for (long c = 0; c < 2; ++c) {
        CHECK(t.col(c).minCoeff() >= a.col(c).minCoeff() - 1e-15);
        CHECK(t.col(c).maxCoeff() <= a.col(c).maxCoeff() + 1e-15);
    }
}

TEST_CASE("moving_average rejects out-of-range kernels") {
    const Matrix z = qltest::random_matrix(4, 1, 36);
    CHECK_THROWS_AS(moving_average(z, 0), std::invalid_argument);
    CHECK_THROWS_AS(moving_average(z, 5), std::invalid_argument);
}

TEST_CASE("decompose oracle values and exact residual definition") {
    Matrix z(4, 1);
    z << 1.0, 2.0, 3.0, 4.0;
    const Decomposition d = decompose(z, 3);
    CHECK(d.season == z - d.trend);  // season is the exact residual by definition
    CHECK(d.season(0, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(d.season(1, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d.season(2, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d.season(3, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const Decomposition w1 = decompose(z, 1);
    CHECK(w1.trend == z);
    CHECK((w1.season.array() == 0.0).all());

    const Decomposition flat = decompose(Matrix::Constant(6, 2, 3.25), 4);
    CHECK((flat.season.array().abs() <= 1e-15).all());
}

TEST_CASE("decompose reconstructs bit-exactly on same-binade inputs") {
    // Positive same-scale inputs keep every subtraction exact in IEEE double
    // (Sterbenz), so trend + season == z holds bitwise.
    for (unsigned seed = 0; seed < 20; ++seed) {
        const Matrix z = qltest::random_matrix(64, 4, 400 + seed, 1.0, 2.0);
        const Decomposition d = decompose(z, 7);
        CHECK((d.trend + d.season) == z);
    }
}

TEST_CASE("decompose reconstructs to one ulp on sign-crossing inputs") {
    const Matrix z = qltest::random_matrix(128, 3, 41, -4.0, 4.0);
    const Decomposition d = decompose(z, 9);
    const Matrix back = d.trend + d.season;
    for (long c = 0; c < z.cols(); ++c)
        for (long t = 0; t < z.rows(); ++t)
            CHECK(std::abs(back(t, c) - z(t, c)) <= 4e-16 * std::max(1.0, std::abs(z(t, c))));
}

TEST_CASE("normalize_last subtracts the final row") {
    Matrix z(2, 1);
    z << 1.0, 3.0;
    const Normalization n = normalize_last(z);
    CHECK(n.normed(0, 0) == -2.0);
    CHECK(n.normed(1, 0) == 0.0);
    CHECK(n.last(0) == 3.0);

    const Normalization flat = normalize_last(Matrix::Constant(5, 3, 1.7));
    CHECK((flat.normed.array() == 0.0).all());
}

TEST_CASE("normalize_last round-trips bit-exactly on same-binade inputs") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        Matrix z = qltest::random_matrix(32, 5, 500 + seed, 1.0, 2.0);
        const Normalization n = normalize_last(z);
        CHECK((n.normed.array() == 0.0).row(31).all());  // last row exactly zero
        Matrix back = n.normed;
        back.rowwise() += n.last;
        CHECK(back == z);
    }
}

TEST_CASE("normalize_against uses the supplied reference") {
    Matrix z(3, 2);
    z << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
    RowVector ref(2);
    ref << 1.0, 2.0;
    const Normalization n = normalize_against(z, ref);
    CHECK(n.normed(0, 0) == 0.0);
    CHECK(n.normed(2, 1) == 4.0);
    CHECK(n.last == ref);

    RowVector bad(3);
    CHECK_THROWS_AS(normalize_against(z, bad), std::invalid_argument);
}

TEST_CASE("subsample_rows picks every stride-th row from the top") {
    Matrix m(7, 2);
    for (long r = 0; r < 7; ++r) {
        m(r, 0) = r;
        m(r, 1) = 10 + r;
    }
    const Matrix s = subsample_rows(m, 3);
    CHECK(s.rows() == 2);
    CHECK(s(0, 0) == 0.0);
    CHECK(s(1, 0) == 3.0);
    CHECK(s(1, 1) == 13.0);
    CHECK_THROWS_AS(subsample_rows(m, 8), std::invalid_argument);
}
