// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "utp/matrix.hpp"

namespace utp {

/// Token segments of the joint sequence, in their fixed concatenation order.
enum class Segment { SR, ST, DT, Text };

inline const char* to_string(Segment s) {
    switch (s) {
        case Segment::SR: return "sr";
        case Segment::ST: return "st";
        case Segment::DT: return "dt";
        case Segment::Text: return "text";
    }
    return "?";
}

inline Segment segment_from_string(std::string_view s) {
    if (s == "sr") return Segment::SR;
    if (s == "st") return Segment::ST;
    if (s == "dt") return Segment::DT;
    if (s == "text") return Segment::Text;
    throw std::invalid_argument(detail::cat("unknown segment '", s, "'"));
}

struct GridShape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t count() const { return rows * cols; }
    bool operator==(const GridShape&) const = default;
};

/// Flat index of the grid's center token, (rows/2, cols/2) with integer
/// division. Even-sided grids take the lower-right of the four middle cells.
inline std::size_t center_index(GridShape grid) {
    UTP_REQUIRE(grid.rows >= 1 && grid.cols >= 1,
                "center_index: grid must be at least 1x1, got ", grid.rows, "x", grid.cols);
    return (grid.rows / 2) * grid.cols + (grid.cols / 2);
}

/// Token counts and grid geometry for the [SR | ST | DT | text] sequence.
struct SegmentLayout {
    std::size_t n_sr = 0;
    std::size_t n_st = 0;
    std::size_t n_dt = 0;
    std::size_t n_text = 0;  // 0 or 1
    GridShape sr_grid;
    GridShape tmpl_grid;
    std::size_t patch_size = 16;
    std::size_t embed_dim = 768;

    std::size_t vision_tokens() const { return n_sr + n_st + n_dt; }
    std::size_t total_tokens() const { return vision_tokens() + n_text; }

    /// Template crop side in pixels; requires a square template grid.
    std::size_t template_side() const {
        UTP_REQUIRE(tmpl_grid.rows == tmpl_grid.cols,
                    "template_side: template grid must be square, got ",
                    tmpl_grid.rows, "x", tmpl_grid.cols);
        return tmpl_grid.rows * patch_size;
    }

    void validate() const {
        UTP_REQUIRE(n_sr == sr_grid.count(),
                    "layout: n_sr=", n_sr, " does not match sr_grid ",
                    sr_grid.rows, "x", sr_grid.cols);
        UTP_REQUIRE(n_st == tmpl_grid.count() && n_dt == tmpl_grid.count(),
                    "layout: template counts (", n_st, ", ", n_dt,
                    ") must both equal tmpl_grid ", tmpl_grid.rows, "x", tmpl_grid.cols);
        UTP_REQUIRE(n_text <= 1, "layout: at most one text token, got ", n_text);
        UTP_REQUIRE(patch_size >= 1, "layout: patch_size must be >= 1");
        UTP_REQUIRE(embed_dim >= 1, "layout: embed_dim must be >= 1");
    }

    static SegmentLayout preset(std::string_view name) {
        SegmentLayout l;
        if (name == "ostrack256") {
            l = {256, 64, 64, 0, {16, 16}, {8, 8}, 16, 768};
        } else if (name == "ostrack384") {
            l = {576, 144, 144, 0, {24, 24}, {12, 12}, 16, 768};
        } else if (name == "sutrack224") {
            l = {196, 49, 49, 1, {14, 14}, {7, 7}, 16, 512};
        } else if (name == "sutrack384") {
            l = {576, 144, 144, 1, {24, 24}, {12, 12}, 16, 512};
        } else {
            throw std::invalid_argument(detail::cat(
                "unknown layout preset '", name,
                "' (expected ostrack256, ostrack384, sutrack224, sutrack384)"));
        }
        l.validate();
        return l;
    }

    bool operator==(const SegmentLayout&) const = default;
};

/// Embedding rows plus the bookkeeping that survives pruning: each token
/// remembers its segment and its flat index within that segment's full grid.
struct TokenBatch {
    Matrix features;  // tokens x embed_dim
    std::vector<Segment> segment_tag;
    std::vector<std::size_t> original_index;

    std::size_t size() const { return segment_tag.size(); }

    std::size_t count(Segment s) const {
        std::size_t n = 0;
        for (Segment tag : segment_tag) {
            if (tag == s) ++n;
        }
        return n;
    }

    /// Contiguous [begin, end) positions of a segment; empty range if absent.
    std::pair<std::size_t, std::size_t> segment_range(Segment s) const {
        std::size_t begin = size();
        std::size_t end = size();
        for (std::size_t i = 0; i < size(); ++i) {
            if (segment_tag[i] == s) {
                begin = i;
                break;
            }
        }
        if (begin == size()) {
            return {0, 0};
        }
        for (end = begin; end < size() && segment_tag[end] == s; ++end) {
        }
        for (std::size_t i = end; i < size(); ++i) {
            UTP_REQUIRE(segment_tag[i] != s,
                        "batch: segment ", to_string(s), " is not contiguous");
        }
        return {begin, end};
    }

    /// Position of the token with the given original index, if still present.
    std::optional<std::size_t> find_token(Segment s, std::size_t orig) const {
        auto [begin, end] = segment_range(s);
        for (std::size_t i = begin; i < end; ++i) {
            if (original_index[i] == orig) {
                return i;
            }
        }
        return std::nullopt;
    }
};

/// Target bounding box within the template crop, in pixels.
struct BBox {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t w = 0;
    std::size_t h = 0;

    void validate(std::size_t side) const {
        UTP_REQUIRE(w >= 1 && h >= 1, "bbox: w and h must be >= 1, got ", w, "x", h);
        UTP_REQUIRE(x + w <= side && y + h <= side,
                    "bbox: (", x, ",", y, ",", w, ",", h, ") exceeds template side ", side);
    }

    bool operator==(const BBox&) const = default;
};

/// Binary foreground mask over the square template crop.
struct PixelMask {
    std::size_t side = 0;
    std::vector<std::uint8_t> pixels;  // side * side, row-major

    std::uint8_t at(std::size_t r, std::size_t c) const { return pixels[r * side + c]; }
};

enum class BonusMode { Off, Full, Soft, All };

inline const char* to_string(BonusMode m) {
    switch (m) {
        case BonusMode::Off: return "off";
        case BonusMode::Full: return "full";
        case BonusMode::Soft: return "soft";
        case BonusMode::All: return "all";
    }
    return "?";
}

inline BonusMode bonus_mode_from_string(std::string_view s) {
    if (s == "off") return BonusMode::Off;
    if (s == "full") return BonusMode::Full;
    if (s == "soft") return BonusMode::Soft;
    if (s == "all") return BonusMode::All;
    throw std::invalid_argument(detail::cat("unknown bonus mode '", s, "'"));
}

/// Per-patch foreground bonus added to static-template scores during ranking.
struct ForegroundBonus {
    BonusMode mode = BonusMode::Off;
    std::vector<double> values;  // one per ST patch, in [0, 1]
    double weight = 1.0;
};

/// Pixels inside the half-open box [y, y+h) x [x, x+w) are set to 1.
inline PixelMask build_mask(const BBox& box, std::size_t template_side) {
    box.validate(template_side);
    PixelMask mask{template_side, std::vector<std::uint8_t>(template_side * template_side, 0)};
    for (std::size_t r = box.y; r < box.y + box.h; ++r) {
        for (std::size_t c = box.x; c < box.x + box.w; ++c) {
            mask.pixels[r * template_side + c] = 1;
        }
    }
    return mask;
}

/// Per-patch bonus over non-overlapping P x P patches in row-major order.
/// full: 1 iff every pixel is foreground; soft: mean pixel value; all: 1 iff
/// any pixel is foreground.
inline std::vector<double> patch_bonus(const PixelMask& mask, std::size_t patch_size, BonusMode mode) {
    UTP_REQUIRE(mode != BonusMode::Off, "patch_bonus: mode must be full, soft, or all");
    UTP_REQUIRE(patch_size >= 1, "patch_bonus: patch_size must be >= 1");
    UTP_REQUIRE(mask.side % patch_size == 0,
                "patch_bonus: mask side ", mask.side, " not divisible by patch size ", patch_size);
    const std::size_t grid = mask.side / patch_size;
    const double area = static_cast<double>(patch_size * patch_size);
    std::vector<double> values(grid * grid, 0.0);
    for (std::size_t pr = 0; pr < grid; ++pr) {
        for (std::size_t pc = 0; pc < grid; ++pc) {
            std::size_t inside = 0;
            for (std::size_t r = 0; r < patch_size; ++r) {
                for (std::size_t c = 0; c < patch_size; ++c) {
                    inside += mask.at(pr * patch_size + r, pc * patch_size + c);
                }
            }
            double v = 0.0;
            switch (mode) {
                case BonusMode::Full: v = (inside == patch_size * patch_size) ? 1.0 : 0.0; break;
                case BonusMode::Soft: v = static_cast<double>(inside) / area; break;
                case BonusMode::All: v = (inside > 0) ? 1.0 : 0.0; break;
                case BonusMode::Off: break;
            }
            values[pr * grid + pc] = v;
        }
    }
    return values;
}

inline ForegroundBonus make_foreground_bonus(const BBox& box, const SegmentLayout& layout,
                                             BonusMode mode, double weight) {
    UTP_REQUIRE(mode != BonusMode::Off, "make_foreground_bonus: mode must not be off");
    const PixelMask mask = build_mask(box, layout.template_side());
    ForegroundBonus bonus;
    bonus.mode = mode;
    bonus.weight = weight;
    bonus.values = patch_bonus(mask, layout.patch_size, mode);
    UTP_REQUIRE(bonus.values.size() == layout.n_st,
                "make_foreground_bonus: ", bonus.values.size(), " patches vs n_st=", layout.n_st);
    return bonus;
}

/// Concatenates the segment embeddings in [SR | ST | DT | text] order and
/// assigns each token its original grid index.
inline TokenBatch assemble_batch(const SegmentLayout& layout, const Matrix& sr, const Matrix& st,
                                 const Matrix& dt, const Matrix* text = nullptr) {
    layout.validate();
    auto check = [&](const Matrix& m, std::size_t want_rows, const char* name) {
        UTP_REQUIRE(m.rows == want_rows && m.cols == layout.embed_dim,
                    "assemble_batch: ", name, " is ", m.rows, "x", m.cols, ", expected ",
                    want_rows, "x", layout.embed_dim);
    };
    check(sr, layout.n_sr, "sr");
    check(st, layout.n_st, "st");
    check(dt, layout.n_dt, "dt");
    if (layout.n_text == 1) {
        UTP_REQUIRE(text != nullptr, "assemble_batch: layout expects a text row");
        check(*text, 1, "text");
    } else {
        UTP_REQUIRE(text == nullptr, "assemble_batch: layout has no text slot");
    }

    TokenBatch batch;
    batch.features = Matrix(layout.total_tokens(), layout.embed_dim);
    batch.segment_tag.reserve(layout.total_tokens());
    batch.original_index.reserve(layout.total_tokens());
    std::size_t row = 0;
    auto append = [&](const Matrix& m, Segment seg) {
        for (std::size_t i = 0; i < m.rows; ++i, ++row) {
            std::copy(m.row(i).begin(), m.row(i).end(), batch.features.row(row).begin());
            batch.segment_tag.push_back(seg);
            batch.original_index.push_back(i);
        }
    };
    append(sr, Segment::SR);
    append(st, Segment::ST);
    append(dt, Segment::DT);
    if (text != nullptr) {
        append(*text, Segment::Text);
    }
    return batch;
}

/// Channel-planar pixel tensor (channels x height x width).
struct ChannelImage {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;
};

/// Builds the six-channel unified input from an RGB crop by duplicating the
/// three color channels into the missing-modality slots.
inline ChannelImage fill_missing_modality(const ChannelImage& rgb) {
    UTP_REQUIRE(rgb.channels == 3,
                "fill_missing_modality: expected 3 channels, got ", rgb.channels);
    UTP_REQUIRE(rgb.data.size() == rgb.channels * rgb.height * rgb.width,
                "fill_missing_modality: data size mismatch");
    ChannelImage out{6, rgb.height, rgb.width, {}};
    out.data.reserve(rgb.data.size() * 2);
    out.data.insert(out.data.end(), rgb.data.begin(), rgb.data.end());
    out.data.insert(out.data.end(), rgb.data.begin(), rgb.data.end());
    return out;
}

}  // namespace utp
