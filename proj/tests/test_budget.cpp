// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "utp/budget.hpp"

using namespace utp;

namespace {

PruningSchedule rgb_schedule(std::vector<std::size_t> ce, std::vector<std::size_t> dte,
                             std::vector<std::size_t> ste) {
    PruningSchedule s;
    s.ce_layers = std::move(ce);
    s.dte_layers = std::move(dte);
    s.ste_layers = std::move(ste);
    s.keep_ratio_sr = 0.7;
    s.keep_ratio_dt = 0.7;
    s.keep_ratio_st = 0.7;
    return s;
}

PruningSchedule unified_schedule(std::vector<std::size_t> ce, std::vector<std::size_t> dte,
                                 std::vector<std::size_t> ste) {
    PruningSchedule s;
    s.ce_layers = std::move(ce);
    s.dte_layers = std::move(dte);
    s.ste_layers = std::move(ste);
    s.keep_ratio_sr = 0.7;
    s.keep_ratio_dt = 0.6;
    s.keep_ratio_st = 0.6;
    return s;
}

std::pair<double, std::size_t> schedule_stats(const SegmentLayout& layout, std::size_t layers,
                                              const PruningSchedule& schedule) {
    const auto counts = token_schedule(layout, layers, schedule);
    std::vector<std::size_t> vision;
    vision.reserve(counts.size());
    for (const SegmentCounts& c : counts) {
        vision.push_back(c.vision());
    }
    return avg_and_cmp(vision);
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

TEST_CASE("token_schedule: search-only chain averages 290.75", "[budget]") {
    const auto layout = SegmentLayout::preset("ostrack256");
    const auto [avg, cmp] = schedule_stats(layout, 12, rgb_schedule({3, 6, 9}, {}, {}));
    CHECK(avg == Catch::Approx(290.75).margin(1e-12));
    CHECK(std::round(avg) == 291.0);
    CHECK(cmp == 217);
}

TEST_CASE("token_schedule: search + dynamic-template chain", "[budget]") {
    const auto layout = SegmentLayout::preset("ostrack256");
    const auto [avg, cmp] = schedule_stats(layout, 12, rgb_schedule({3, 6, 9}, {4, 7, 10}, {}));
    CHECK(round1(avg) == 271.2);
    CHECK(cmp == 176);
}

TEST_CASE("token_schedule: full chain hits the per-layer vector", "[budget]") {
    const auto layout = SegmentLayout::preset("ostrack256");
    const auto counts =
        token_schedule(layout, 12, rgb_schedule({3, 6, 9}, {4, 7, 10}, {4, 7, 10}));
    const std::vector<std::size_t> expected{384, 384, 384, 308, 270, 270,
                                            216, 190, 190, 153, 135, 135};
    REQUIRE(counts.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(counts[i].vision() == expected[i]);
    }
    CHECK(counts.back().sr == 89);
    CHECK(counts.back().st == 23);
    CHECK(counts.back().dt == 23);
    std::vector<std::size_t> vision;
    for (const auto& c : counts) {
        vision.push_back(c.vision());
    }
    const auto [avg, cmp] = avg_and_cmp(vision);
    CHECK(std::round(avg) == 252.0);
    CHECK(cmp == 135);
}

TEST_CASE("token_schedule: placement sweep avgs, 12-layer family", "[budget]") {
    const auto layout = SegmentLayout::preset("ostrack256");
    const struct {
        std::vector<std::size_t> ce, dte;
        double avg;
    } rows[] = {
        {{3, 6, 9}, {3, 6, 9}, 267.8},
        {{3, 6, 9}, {4, 7, 10}, 271.2},
        {{3, 6, 9}, {2, 5, 8}, 264.3},
        {{2, 5, 8}, {3, 6, 9}, 253.8},
        {{4, 7, 10}, {3, 6, 9}, 281.7},
    };
    for (const auto& row : rows) {
        const auto [avg, cmp] = schedule_stats(layout, 12, rgb_schedule(row.ce, row.dte, {}));
        CHECK(round1(avg) == row.avg);
        CHECK(cmp == 176);
    }
}

TEST_CASE("token_schedule: unified chains", "[budget]") {
    const auto layout = SegmentLayout::preset("sutrack224");

    const auto [avg_ce, cmp_ce] = schedule_stats(layout, 24, unified_schedule({6, 12, 18}, {}, {}));
    CHECK(avg_ce == Catch::Approx(222.75).margin(1e-12));
    CHECK(std::round(avg_ce) == 223.0);
    CHECK(cmp_ce == 166);

    const auto [avg_dte, cmp_dte] =
        schedule_stats(layout, 24, unified_schedule({6, 12, 18}, {9, 15, 21}, {}));
    CHECK(std::round(avg_dte) == 206.0);
    CHECK(cmp_dte == 128);

    const auto [avg_full, cmp_full] =
        schedule_stats(layout, 24, unified_schedule({6, 12, 18}, {9, 15, 21}, {9, 15, 21}));
    CHECK(avg_full == Catch::Approx(188.25).margin(1e-12));
    CHECK(std::round(avg_full) == 188.0);
    CHECK(cmp_full == 90);
}

TEST_CASE("token_schedule: placement sweep avgs, 24-layer family", "[budget]") {
    const auto layout = SegmentLayout::preset("sutrack224");
    const struct {
        std::vector<std::size_t> ce, dte;
        double avg;
    } rows[] = {
        {{6, 12, 18}, {6, 12, 18}, 201.0},
        {{6, 12, 18}, {9, 15, 21}, 206.0},
        {{6, 12, 18}, {3, 9, 15}, 196.0},
        {{3, 9, 15}, {6, 12, 18}, 185.0},
        {{9, 15, 21}, {6, 12, 18}, 217.0},
    };
    for (const auto& row : rows) {
        const auto [avg, cmp] = schedule_stats(layout, 24, unified_schedule(row.ce, row.dte, {}));
        CHECK(std::round(avg) == row.avg);
        CHECK(cmp == 128);
    }
}

TEST_CASE("token_schedule: 384-scale default chains", "[budget]") {
    // 12-layer family at the higher resolution: the default schedule prunes
    // 65.4% of the 864 vision tokens.
    const auto o384 = SegmentLayout::preset("ostrack384");
    const auto [avg_o, cmp_o] =
        schedule_stats(o384, 12, rgb_schedule({3, 6, 9}, {4, 7, 10}, {4, 7, 10}));
    CHECK(cmp_o == 299);
    const double pruned_pct = 100.0 * (1.0 - static_cast<double>(cmp_o) / 864.0);
    CHECK(std::round(pruned_pct * 10.0) / 10.0 == 65.4);
    CHECK(avg_o == Catch::Approx(564.0 + 1.0 / 6.0).margin(1e-12));

    // Unified 384 regression pin under the family-default ratios.
    const auto s384 = SegmentLayout::preset("sutrack384");
    const auto [avg_s, cmp_s] =
        schedule_stats(s384, 24, unified_schedule({6, 12, 18}, {9, 15, 21}, {9, 15, 21}));
    CHECK(cmp_s == 263);
    CHECK(avg_s == Catch::Approx(551.5).margin(1e-12));
}

TEST_CASE("token_schedule: empty schedule is constant", "[budget]") {
    const auto layout = SegmentLayout::preset("sutrack224");
    const auto [avg, cmp] = schedule_stats(layout, 24, PruningSchedule{});
    CHECK(avg == 294.0);
    CHECK(cmp == 294);
}

TEST_CASE("avg_and_cmp: constant and mixed sequences", "[budget]") {
    const std::vector<std::size_t> constant(24, 294);
    const auto [avg, cmp] = avg_and_cmp(constant);
    CHECK(avg == 294.0);
    CHECK(cmp == 294);
    CHECK_THROWS_AS(avg_and_cmp(std::vector<std::size_t>{}), std::invalid_argument);
}

TEST_CASE("estimate_macs: closed form, scaling, monotonicity", "[budget]") {
    const std::vector<std::size_t> baseline(12, 384);
    const double macs = estimate_macs(baseline, 768, 4.0);
    // 12 * (12 * 384 * 768^2 + 2 * 384^2 * 768)
    CHECK(macs == Catch::Approx(35.332816896e9).epsilon(1e-12));
    CHECK(std::abs(macs - 35.33e9) <= 0.001 * 35.33e9);

    // Halving N quarters the quadratic term and halves the linear term.
    const double full = estimate_macs(std::vector<std::size_t>{400}, 64, 4.0);
    const double half = estimate_macs(std::vector<std::size_t>{200}, 64, 4.0);
    const double linear_full = 12.0 * 400 * 64 * 64;
    const double quad_full = 2.0 * 400.0 * 400.0 * 64.0;
    CHECK(full == Catch::Approx(linear_full + quad_full));
    CHECK(half == Catch::Approx(linear_full / 2.0 + quad_full / 4.0));

    // Strictly monotone in every per-layer count.
    std::vector<std::size_t> counts{10, 20, 30};
    const double base = estimate_macs(counts, 16, 4.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        auto bumped = counts;
        bumped[i] += 1;
        CHECK(estimate_macs(bumped, 16, 4.0) > base);
    }
}

TEST_CASE("budget report: full schedule reduction near one third", "[budget]") {
    const auto layout = SegmentLayout::preset("ostrack256");
    const BudgetReport report =
        make_budget_report(layout, 12, 768, 4.0, rgb_schedule({3, 6, 9}, {4, 7, 10}, {4, 7, 10}));
    CHECK(report.cmp_vis_tok == 135);
    CHECK(std::round(report.avg_vis_tok) == 252.0);
    CHECK(report.macs_baseline == Catch::Approx(35.332816896e9).epsilon(1e-12));
    CHECK(std::abs(report.reduction_pct - 31.0) <= 5.0);
}

TEST_CASE("calibrate_keep_ratios: published targets", "[budget]") {
    const auto o256 = SegmentLayout::preset("ostrack256");
    const auto sr_hits = calibrate_keep_ratios(o256, 12, Segment::SR, {3, 6, 9}, 89);
    REQUIRE(sr_hits.size() == 1);
    CHECK(sr_hits[0].ratio == 0.7);
    CHECK(sr_hits[0].rounding == Rounding::Ceil);

    const auto s224 = SegmentLayout::preset("sutrack224");
    const auto dt_hits = calibrate_keep_ratios(s224, 24, Segment::DT, {9, 15, 21}, 11);
    CHECK(std::count(dt_hits.begin(), dt_hits.end(), CalibrationHit{0.6, Rounding::Ceil}) == 1);

    // Target equal to the start matches trivially at ratio 1.0.
    const auto trivial = calibrate_keep_ratios(o256, 12, Segment::SR, {3, 6, 9}, 256);
    bool has_unity = false;
    for (const auto& hit : trivial) {
        if (hit.ratio == 1.0) {
            has_unity = true;
        }
    }
    CHECK(has_unity);

    // Unreachable target reports an empty set rather than an error.
    CHECK(calibrate_keep_ratios(o256, 12, Segment::SR, {3, 6, 9}, 999).empty());
    CHECK_THROWS_AS(calibrate_keep_ratios(o256, 12, Segment::Text, {3}, 1),
                    std::invalid_argument);
}

TEST_CASE("schedule validation", "[budget]") {
    PruningSchedule s;
    s.ce_layers = {3, 6, 9};
    s.validate(12);
    s.ce_layers = {0};
    CHECK_THROWS_AS(s.validate(12), std::invalid_argument);
    s.ce_layers = {13};
    CHECK_THROWS_AS(s.validate(12), std::invalid_argument);
    s.ce_layers = {3, 3};
    CHECK_THROWS_AS(s.validate(12), std::invalid_argument);
    s.ce_layers = {3};
    s.keep_ratio_sr = 0.0;
    CHECK_THROWS_AS(s.validate(12), std::invalid_argument);
}
