// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "utp/common.hpp"

namespace utp {

/// Dense row-major matrix of 64-bit reals. All kernels below accumulate in a
/// fixed left-to-right order, so results are reproducible run to run.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> values) {
        Matrix m(values.size(), values.size() ? values.begin()->size() : 0);
        std::size_t r = 0;
        for (const auto& row : values) {
            UTP_REQUIRE(row.size() == m.cols, "from_rows: ragged row ", r);
            std::copy(row.begin(), row.end(), m.data.begin() + r * m.cols);
            ++r;
        }
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

inline bool all_finite(const Matrix& m) {
    return std::all_of(m.data.begin(), m.data.end(),
                       [](double v) { return std::isfinite(v); });
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    UTP_REQUIRE(a.rows == b.rows && a.cols == b.cols,
                "max_abs_diff: shape mismatch ", a.rows, "x", a.cols, " vs ", b.rows, "x", b.cols);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    }
    return worst;
}

/// Standard product a*b. Inner loops run j-contiguous over b's rows, which
/// still accumulates every output entry over k in ascending order.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    UTP_REQUIRE(a.cols == b.rows,
                "matmul: shape mismatch ", a.rows, "x", a.cols, " vs ", b.rows, "x", b.cols);
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* out_row = out.data.data() + i * out.cols;
        const double* a_row = a.data.data() + i * a.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a_row[k];
            const double* b_row = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) {
                out_row[j] += aik * b_row[j];
            }
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            out(j, i) = m(i, j);
        }
    }
    return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
    UTP_REQUIRE(a.rows == b.rows && a.cols == b.cols,
                "add: shape mismatch ", a.rows, "x", a.cols, " vs ", b.rows, "x", b.cols);
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += b.data[i];
    }
    return out;
}

/// Row-wise softmax. Each row is shifted by its max before exponentiation, so
/// arbitrarily large finite logits cannot overflow.
inline Matrix softmax_rows(const Matrix& m) {
    UTP_REQUIRE(all_finite(m), "softmax_rows: input must be finite");
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto in_row = m.row(i);
        auto out_row = out.row(i);
        if (in_row.empty()) {
            continue;
        }
        const double row_max = *std::max_element(in_row.begin(), in_row.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < in_row.size(); ++j) {
            out_row[j] = std::exp(in_row[j] - row_max);
            sum += out_row[j];
        }
        for (std::size_t j = 0; j < out_row.size(); ++j) {
            out_row[j] /= sum;
        }
    }
    return out;
}

/// Indices of the k largest scores, returned in ascending index order.
/// Selection ties break toward the earlier index, on every platform.
inline std::vector<std::size_t> topk_indices(std::span<const double> scores, std::size_t k) {
    UTP_REQUIRE(k <= scores.size(),
                "topk_indices: k=", k, " exceeds score count ", scores.size());
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

/// Hann window: w[i] = 0.5 * (1 - cos(2*pi*i / (n-1))); [1] for n == 1.
inline std::vector<double> hann_window(std::size_t n) {
    UTP_REQUIRE(n >= 1, "hann_window: n must be >= 1");
    std::vector<double> w(n, 1.0);
    if (n == 1) {
        return w;
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom));
    }
    return w;
}

}  // namespace utp
