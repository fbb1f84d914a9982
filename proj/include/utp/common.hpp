// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace utp {

namespace detail {

template <typename... Parts>
std::string cat(Parts&&... parts) {
    std::ostringstream oss;
    (oss << ... << parts);
    return oss.str();
}

}  // namespace detail

// Precondition check; throws std::invalid_argument with a composed message.
#define UTP_REQUIRE(cond, ...)                                                  \
    do {                                                                        \
        if (!(cond)) {                                                          \
            throw std::invalid_argument(::utp::detail::cat(__VA_ARGS__));       \
        }                                                                       \
    } while (false)

// Tokens retained by one prune event: ceil(keep_ratio * current). The small
// guard keeps products that land a few ulps above an exact integer (e.g.
// 0.1 * 50) from rounding up one token too many. Shared by the pruning path
// and the closed-form schedule calculator so both always agree.
inline std::size_t keep_count(double keep_ratio, std::size_t current) {
    UTP_REQUIRE(keep_ratio > 0.0 && keep_ratio <= 1.0,
                "keep_ratio must be in (0, 1], got ", keep_ratio);
    const double raw = keep_ratio * static_cast<double>(current);
    auto kept = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    if (kept < 1) {
        kept = 1;
    }
    if (kept > current) {
        kept = current;
    }
    return kept;
}

}  // namespace utp
