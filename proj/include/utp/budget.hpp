// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "utp/layout.hpp"

namespace utp {

enum class Rounding { Floor, Round, Ceil };

inline const char* to_string(Rounding r) {
    switch (r) {
        case Rounding::Floor: return "floor";
        case Rounding::Round: return "round";
        case Rounding::Ceil: return "ceil";
    }
    return "?";
}

/// Which segment is pruned after which layer, at what keep ratio. Layer
/// indices are 1-based and strictly increasing per list.
struct PruningSchedule {
    std::vector<std::size_t> ce_layers;
    std::vector<std::size_t> dte_layers;
    std::vector<std::size_t> ste_layers;
    double keep_ratio_sr = 1.0;
    double keep_ratio_dt = 1.0;
    double keep_ratio_st = 1.0;

    bool empty() const { return ce_layers.empty() && dte_layers.empty() && ste_layers.empty(); }

    void validate(std::size_t num_layers) const {
        auto check = [&](const std::vector<std::size_t>& layers, const char* name) {
            std::size_t prev = 0;
            for (std::size_t layer : layers) {
                UTP_REQUIRE(layer >= 1 && layer <= num_layers,
                            name, " layer ", layer, " outside [1, ", num_layers, "]");
                UTP_REQUIRE(layer > prev, name, " layers must be strictly increasing");
                prev = layer;
            }
        };
        check(ce_layers, "ce");
        check(dte_layers, "dte");
        check(ste_layers, "ste");
        auto check_ratio = [](double r, const char* name) {
            UTP_REQUIRE(r > 0.0 && r <= 1.0, name, " must be in (0, 1], got ", r);
        };
        check_ratio(keep_ratio_sr, "keep_ratio_sr");
        check_ratio(keep_ratio_dt, "keep_ratio_dt");
        check_ratio(keep_ratio_st, "keep_ratio_st");
    }

    bool operator==(const PruningSchedule&) const = default;
};

struct SegmentCounts {
    std::size_t sr = 0;
    std::size_t st = 0;
    std::size_t dt = 0;

    std::size_t vision() const { return sr + st + dt; }
    bool operator==(const SegmentCounts&) const = default;
};

/// Segment token counts entering each layer. Counts shrink by
/// ceil(ratio * current) after each scheduled layer, so layer L itself still
/// processes the pre-prune count.
inline std::vector<SegmentCounts> token_schedule(const SegmentLayout& layout,
                                                 std::size_t num_layers,
                                                 const PruningSchedule& schedule) {
    layout.validate();
    UTP_REQUIRE(num_layers >= 1, "token_schedule: num_layers must be >= 1");
    schedule.validate(num_layers);
    auto scheduled = [](const std::vector<std::size_t>& layers, std::size_t layer) {
        return std::binary_search(layers.begin(), layers.end(), layer);
    };
    std::vector<SegmentCounts> per_layer;
    per_layer.reserve(num_layers);
    SegmentCounts counts{layout.n_sr, layout.n_st, layout.n_dt};
    for (std::size_t layer = 1; layer <= num_layers; ++layer) {
        per_layer.push_back(counts);
        if (scheduled(schedule.ce_layers, layer)) {
            counts.sr = keep_count(schedule.keep_ratio_sr, counts.sr);
        }
        if (scheduled(schedule.dte_layers, layer)) {
            counts.dt = keep_count(schedule.keep_ratio_dt, counts.dt);
        }
        if (scheduled(schedule.ste_layers, layer)) {
            counts.st = keep_count(schedule.keep_ratio_st, counts.st);
        }
    }
    return per_layer;
}

/// Mean vision tokens over layers, and the final compressed count.
inline std::pair<double, std::size_t> avg_and_cmp(std::span<const std::size_t> per_layer_vision) {
    UTP_REQUIRE(!per_layer_vision.empty(), "avg_and_cmp: no layers");
    double sum = 0.0;
    for (std::size_t n : per_layer_vision) {
        sum += static_cast<double>(n);
    }
    return {sum / static_cast<double>(per_layer_vision.size()), per_layer_vision.back()};
}

/// Per-layer transformer MACs: (4 + 2*mlp_ratio) * N * d^2 for the QKV,
/// output, and MLP projections plus 2 * N^2 * d for the score and value
/// products. Patch embedding, head, and normalization costs are
/// schedule-independent constants and are not modeled.
inline double estimate_macs(std::span<const std::size_t> per_layer_total,
                            std::size_t embed_dim, double mlp_ratio = 4.0) {
    UTP_REQUIRE(embed_dim >= 1, "estimate_macs: embed_dim must be >= 1");
    UTP_REQUIRE(mlp_ratio > 0.0, "estimate_macs: mlp_ratio must be positive");
    const double d = static_cast<double>(embed_dim);
    const double proj_factor = 4.0 + 2.0 * mlp_ratio;
    double total = 0.0;
    for (std::size_t tokens : per_layer_total) {
        const double n = static_cast<double>(tokens);
        total += proj_factor * n * d * d + 2.0 * n * n * d;
    }
    return total;
}

/// Per-layer vision-token counts, their average, the compressed count, and
/// MAC totals against the unpruned baseline for the same geometry.
struct BudgetReport {
    std::vector<std::size_t> per_layer_tokens;  // vision tokens per layer
    double avg_vis_tok = 0.0;
    std::size_t cmp_vis_tok = 0;
    double macs_total = 0.0;
    double macs_baseline = 0.0;
    double reduction_pct = 0.0;
};

inline BudgetReport make_budget_report(const SegmentLayout& layout, std::size_t num_layers,
                                       std::size_t embed_dim, double mlp_ratio,
                                       const PruningSchedule& schedule) {
    const auto counts = token_schedule(layout, num_layers, schedule);
    BudgetReport report;
    report.per_layer_tokens.reserve(counts.size());
    std::vector<std::size_t> totals;
    totals.reserve(counts.size());
    for (const SegmentCounts& c : counts) {
        report.per_layer_tokens.push_back(c.vision());
        totals.push_back(c.vision() + layout.n_text);  // MAC totals include the text token
    }
    auto [avg, cmp] = avg_and_cmp(report.per_layer_tokens);
    report.avg_vis_tok = avg;
    report.cmp_vis_tok = cmp;
    report.macs_total = estimate_macs(totals, embed_dim, mlp_ratio);
    const std::vector<std::size_t> baseline_totals(num_layers, layout.total_tokens());
    report.macs_baseline = estimate_macs(baseline_totals, embed_dim, mlp_ratio);
    report.reduction_pct = 100.0 * (1.0 - report.macs_total / report.macs_baseline);
    return report;
}

/// One grid-search hit: a keep ratio and rounding mode whose chained keep
/// counts land exactly on the target.
struct CalibrationHit {
    double ratio = 0.0;
    Rounding rounding = Rounding::Ceil;

    bool operator==(const CalibrationHit&) const = default;
};

namespace detail {

inline std::size_t rounded_keep(double ratio, std::size_t current, Rounding mode) {
    const double raw = ratio * static_cast<double>(current);
    double value = 0.0;
    switch (mode) {
        case Rounding::Floor: value = std::floor(raw + 1e-9); break;
        case Rounding::Round: value = std::round(raw); break;
        case Rounding::Ceil: value = std::ceil(raw - 1e-9); break;
    }
    auto kept = static_cast<std::size_t>(std::max(value, 1.0));
    return std::min(kept, current);
}

}  // namespace detail

/// Exhaustive search over ratios {0.50, 0.55, ..., 0.90, 1.00} and the three
/// rounding modes for chains whose final count hits the target exactly. An
/// empty result means no configuration matches; it is not an error.
inline std::vector<CalibrationHit> calibrate_keep_ratios(const SegmentLayout& layout,
                                                         std::size_t num_layers, Segment segment,
                                                         const std::vector<std::size_t>& event_layers,
                                                         std::size_t target) {
    layout.validate();
    for (std::size_t layer : event_layers) {
        UTP_REQUIRE(layer >= 1 && layer <= num_layers,
                    "calibrate: event layer ", layer, " outside [1, ", num_layers, "]");
    }
    std::size_t start = 0;
    switch (segment) {
        case Segment::SR: start = layout.n_sr; break;
        case Segment::ST: start = layout.n_st; break;
        case Segment::DT: start = layout.n_dt; break;
        case Segment::Text:
            throw std::invalid_argument("calibrate: the text token is never pruned");
    }

    std::vector<int> percents;
    for (int p = 50; p <= 90; p += 5) {
        percents.push_back(p);
    }
    percents.push_back(100);

    std::vector<CalibrationHit> hits;
    for (int p : percents) {
        const double ratio = static_cast<double>(p) / 100.0;
        for (Rounding mode : {Rounding::Floor, Rounding::Round, Rounding::Ceil}) {
            std::size_t count = start;
            for (std::size_t e = 0; e < event_layers.size(); ++e) {
                count = detail::rounded_keep(ratio, count, mode);
            }
            if (count == target) {
                hits.push_back({ratio, mode});
            }
        }
    }
    return hits;
}

}  // namespace utp
