// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "utp/matrix.hpp"

namespace utp {

/// SplitMix64: tiny, fully specified generator so seeded fixtures and weights
/// are identical on every platform (std distributions are not portable).
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [-scale, scale).
    double next_symmetric(double scale) { return (2.0 * next_unit() - 1.0) * scale; }

    /// Uniform integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }
};

/// Decorrelated child seed for a named stream of a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    SplitMix64 g(base ^ (0xd1b54a32d192ed03ull * (stream + 1)));
    return g.next_u64();
}

inline Matrix seeded_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
    Matrix m(rows, cols);
    SplitMix64 g(seed);
    for (double& v : m.data) {
        v = g.next_symmetric(scale);
    }
    return m;
}

}  // namespace utp
