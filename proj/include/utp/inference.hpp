// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "utp/matrix.hpp"

namespace utp {

/// Dynamic-template refresh policy: update on fixed frame intervals, gated by
/// a confidence threshold.
struct DtUpdateState {
    std::size_t frame_counter = 0;
    std::size_t update_interval = 25;
    double confidence_threshold = 0.7;

    void validate() const {
        UTP_REQUIRE(update_interval >= 1, "dt update: interval must be >= 1");
        UTP_REQUIRE(confidence_threshold >= 0.0 && confidence_threshold <= 1.0,
                    "dt update: threshold must be in [0, 1]");
    }
};

/// True iff the frame lands on the interval and confidence clears the
/// threshold. The counter advances either way.
inline bool dt_update_decision(DtUpdateState& state, std::size_t frame_index, double confidence) {
    state.validate();
    UTP_REQUIRE(frame_index >= 1, "dt update: frame_index must be >= 1");
    state.frame_counter += 1;
    return frame_index % state.update_interval == 0 && confidence > state.confidence_threshold;
}

/// Multiplies the response map elementwise with the outer product of 1-D Hann
/// windows over its rows and columns.
inline Matrix hanning_penalty(const Matrix& score_map) {
    UTP_REQUIRE(score_map.rows >= 1 && score_map.cols >= 1,
                "hanning_penalty: empty score map");
    const std::vector<double> row_window = hann_window(score_map.rows);
    const std::vector<double> col_window = hann_window(score_map.cols);
    Matrix out(score_map.rows, score_map.cols);
    for (std::size_t i = 0; i < score_map.rows; ++i) {
        for (std::size_t j = 0; j < score_map.cols; ++j) {
            out(i, j) = score_map(i, j) * row_window[i] * col_window[j];
        }
    }
    return out;
}

}  // namespace utp
