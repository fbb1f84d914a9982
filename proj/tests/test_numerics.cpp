// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "utp/matrix.hpp"
#include "utp/rng.hpp"

using namespace utp;

TEST_CASE("matmul: identity and selector cases", "[numerics]") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(matmul(Matrix::identity(2), a) == a);

    const Matrix selector = Matrix::from_rows({{1, 0}});
    const Matrix column = Matrix::from_rows({{5}, {7}});
    const Matrix picked = matmul(selector, column);
    REQUIRE(picked.rows == 1);
    REQUIRE(picked.cols == 1);
    CHECK(picked(0, 0) == 5.0);

    const Matrix ones = Matrix::from_rows({{1}, {1}});
    const Matrix sums = matmul(a, ones);
    CHECK(sums(0, 0) == 3.0);
    CHECK(sums(1, 0) == 7.0);
}

TEST_CASE("matmul: dimension mismatch names both shapes", "[numerics]") {
    const Matrix a(2, 3);
    const Matrix b(4, 5);
    CHECK_THROWS_WITH(matmul(a, b), Catch::Matchers::ContainsSubstring("2x3") &&
                                        Catch::Matchers::ContainsSubstring("4x5"));
}

TEST_CASE("matmul: associativity on well-conditioned random inputs", "[numerics]") {
    SplitMix64 g(11);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = seeded_matrix(8, 8, g.next_u64(), 1.0);
        const Matrix b = seeded_matrix(8, 8, g.next_u64(), 1.0);
        const Matrix c = seeded_matrix(8, 8, g.next_u64(), 1.0);
        CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-9);
    }
}

TEST_CASE("softmax_rows: frozen examples", "[numerics]") {
    const Matrix uniform = softmax_rows(Matrix::from_rows({{0, 0, 0}}));
    for (double v : uniform.data) {
        CHECK(v == Catch::Approx(1.0 / 3.0).margin(1e-15));
    }

    const Matrix ramp = softmax_rows(Matrix::from_rows({{0, 1, 2}}));
    CHECK(ramp(0, 0) == Catch::Approx(0.09003057).margin(1e-8));
    CHECK(ramp(0, 1) == Catch::Approx(0.24472847).margin(1e-8));
    CHECK(ramp(0, 2) == Catch::Approx(0.66524096).margin(1e-8));

    const Matrix large = softmax_rows(Matrix::from_rows({{1000, 1000}}));
    CHECK(large(0, 0) == 0.5);
    CHECK(large(0, 1) == 0.5);
}

TEST_CASE("softmax_rows: rows sum to one and shift invariance", "[numerics]") {
    SplitMix64 g(22);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix m(1 + g.next_below(6), 1 + g.next_below(9));
        for (double& v : m.data) {
            v = g.next_symmetric(30.0);
        }
        const Matrix soft = softmax_rows(m);
        REQUIRE(all_finite(soft));
        Matrix shifted = m;
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double c = g.next_symmetric(100.0);
            for (std::size_t j = 0; j < m.cols; ++j) {
                shifted(i, j) += c;
            }
        }
        const Matrix soft_shifted = softmax_rows(shifted);
        for (std::size_t i = 0; i < soft.rows; ++i) {
            double sum = 0.0;
            for (double v : soft.row(i)) {
                CHECK(v > 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        CHECK(max_abs_diff(soft, soft_shifted) <= 1e-12);
    }
}

TEST_CASE("topk_indices: frozen examples", "[numerics]") {
    const std::vector<double> tied{0.5, 0.2, 0.5};
    CHECK(topk_indices(tied, 2) == std::vector<std::size_t>{0, 2});

    const std::vector<double> ramp{1, 2, 3};
    CHECK(topk_indices(ramp, 3) == std::vector<std::size_t>{0, 1, 2});

    const std::vector<double> spike{3, 1, 2};
    CHECK(topk_indices(spike, 1) == std::vector<std::size_t>{0});

    CHECK_THROWS_AS(topk_indices(ramp, 4), std::invalid_argument);
}

TEST_CASE("topk_indices: invariant under strictly increasing transforms", "[numerics]") {
    SplitMix64 g(33);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + g.next_below(16);
        std::vector<double> scores(n);
        for (double& s : scores) {
            s = 0.25 * static_cast<double>(g.next_below(5));
        }
        const std::size_t k = 1 + g.next_below(n);
        const auto base = topk_indices(scores, k);

        std::vector<double> cubed(n);
        std::vector<double> affine(n);
        for (std::size_t i = 0; i < n; ++i) {
            cubed[i] = scores[i] * scores[i] * scores[i] + scores[i];
            affine[i] = 7.5 * scores[i] - 2.0;
        }
        CHECK(topk_indices(cubed, k) == base);
        CHECK(topk_indices(affine, k) == base);
    }
}

TEST_CASE("hann_window: frozen examples", "[numerics]") {
    CHECK(hann_window(1) == std::vector<double>{1.0});

    const auto w3 = hann_window(3);
    CHECK(w3[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(w3[1] == Catch::Approx(1.0).margin(1e-15));
    CHECK(w3[2] == Catch::Approx(0.0).margin(1e-15));

    const auto w5 = hann_window(5);
    const std::vector<double> expected{0.0, 0.5, 1.0, 0.5, 0.0};
    REQUIRE(w5.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(w5[i] == Catch::Approx(expected[i]).margin(1e-15));
    }

    CHECK_THROWS_AS(hann_window(0), std::invalid_argument);
}

TEST_CASE("keep_count: calibrated chains and guard behavior", "[numerics]") {
    CHECK(keep_count(0.7, 256) == 180);
    CHECK(keep_count(0.7, 180) == 126);
    CHECK(keep_count(0.7, 126) == 89);
    CHECK(keep_count(1.0, 64) == 64);
    CHECK(keep_count(0.1, 50) == 5);  // product sits a hair above 5.0 in binary
    CHECK_THROWS_AS(keep_count(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(keep_count(1.5, 10), std::invalid_argument);
}
