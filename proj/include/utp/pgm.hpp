// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include "utp/common.hpp"

namespace utp {

/// Binary PGM (P5), maxval 255.
inline void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      std::span<const std::uint8_t> pixels) {
    UTP_REQUIRE(pixels.size() == width * height,
                "write_pgm: ", pixels.size(), " pixels for ", width, "x", height);
    std::ofstream os(path, std::ios::binary);
    UTP_REQUIRE(os.good(), "write_pgm: cannot open ", path.string());
    os << "P5\n" << width << " " << height << "\n255\n";
    os.write(reinterpret_cast<const char*>(pixels.data()),
             static_cast<std::streamsize>(pixels.size()));
    UTP_REQUIRE(os.good(), "write_pgm: failed writing ", path.string());
}

}  // namespace utp
