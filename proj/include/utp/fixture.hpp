// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "utp/matrix.hpp"

namespace utp {

// UTPF fixture: magic "UTPF", u32 rows, u32 cols, then rows*cols float32
// values row-major, everything little-endian. Values are widened to 64-bit
// on load.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> bytes{
        static_cast<char>(v & 0xff),
        static_cast<char>((v >> 8) & 0xff),
        static_cast<char>((v >> 16) & 0xff),
        static_cast<char>((v >> 24) & 0xff),
    };
    os.write(bytes.data(), bytes.size());
}

inline std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> bytes{};
    is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace detail

inline void write_utpf(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream os(path, std::ios::binary);
    UTP_REQUIRE(os.good(), "write_utpf: cannot open ", path.string());
    os.write("UTPF", 4);
    detail::put_u32(os, static_cast<std::uint32_t>(m.rows));
    detail::put_u32(os, static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) {
        detail::put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    UTP_REQUIRE(os.good(), "write_utpf: failed writing ", path.string());
}

inline Matrix read_utpf(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    UTP_REQUIRE(is.good(), "read_utpf: cannot open ", path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    const bool magic_ok =
        is.good() && magic[0] == 'U' && magic[1] == 'T' && magic[2] == 'P' && magic[3] == 'F';
    UTP_REQUIRE(magic_ok, "read_utpf: ", path.string(), " is not a UTPF fixture");
    const std::uint32_t rows = detail::get_u32(is);
    const std::uint32_t cols = detail::get_u32(is);
    UTP_REQUIRE(is.good(), "read_utpf: truncated header in ", path.string());
    Matrix m(rows, cols);
    for (double& v : m.data) {
        v = static_cast<double>(std::bit_cast<float>(detail::get_u32(is)));
        UTP_REQUIRE(is.good(), "read_utpf: truncated payload in ", path.string());
    }
    is.peek();
    UTP_REQUIRE(is.eof(), "read_utpf: trailing bytes in ", path.string());
    return m;
}

}  // namespace utp
