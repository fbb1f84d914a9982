// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "utp/encoder.hpp"
#include "utp/testing/masked_reference.hpp"

using namespace utp;

namespace {

TokenBatch seeded_batch(const SegmentLayout& layout, std::uint64_t seed) {
    const Matrix sr = seeded_matrix(layout.n_sr, layout.embed_dim, derive_seed(seed, 1), 1.0);
    const Matrix st = seeded_matrix(layout.n_st, layout.embed_dim, derive_seed(seed, 2), 1.0);
    const Matrix dt = seeded_matrix(layout.n_dt, layout.embed_dim, derive_seed(seed, 3), 1.0);
    if (layout.n_text == 1) {
        const Matrix text = seeded_matrix(1, layout.embed_dim, derive_seed(seed, 4), 1.0);
        return assemble_batch(layout, sr, st, dt, &text);
    }
    return assemble_batch(layout, sr, st, dt);
}

SegmentLayout small_layout(std::size_t embed_dim, std::size_t n_text = 0) {
    SegmentLayout layout;
    layout.n_sr = 9;
    layout.sr_grid = {3, 3};
    layout.n_st = 4;
    layout.n_dt = 4;
    layout.tmpl_grid = {2, 2};
    layout.n_text = n_text;
    layout.patch_size = 4;
    layout.embed_dim = embed_dim;
    return layout;
}

}  // namespace

TEST_CASE("encoder presets", "[encoder]") {
    const auto rgb = EncoderConfig::preset("ostrack256");
    CHECK(rgb.num_layers == 12);
    CHECK(rgb.embed_dim == 768);
    CHECK(rgb.num_heads == 12);
    CHECK(rgb.head_dim() == 64);

    const auto unified = EncoderConfig::preset("sutrack384");
    CHECK(unified.num_layers == 24);
    CHECK(unified.head_dim() == 64);

    EncoderConfig bad = rgb;
    bad.num_heads = 7;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("joint_attention: single token attends to itself", "[encoder]") {
    EncoderConfig config;
    config.num_layers = 1;
    config.embed_dim = 4;
    config.num_heads = 2;
    config.weight_seed = 5;
    const EncoderWeights weights = EncoderWeights::seeded(config);

    const Matrix token = seeded_matrix(1, 4, 99, 1.0);
    const AttentionOutput out = joint_attention(token, weights.layers[0], 2);
    REQUIRE(out.attention.size() == 2);
    for (const Matrix& head : out.attention) {
        REQUIRE(head.rows == 1);
        CHECK(head(0, 0) == 1.0);
    }
    // With weight 1.0 the context row equals the token's value row.
    const Matrix v = matmul(token, weights.layers[0].value);
    CHECK(max_abs_diff(out.context, v) == 0.0);
}

TEST_CASE("joint_attention: identical tokens split attention evenly", "[encoder]") {
    EncoderConfig config;
    config.embed_dim = 6;
    config.num_heads = 3;
    config.weight_seed = 6;
    const EncoderWeights weights = EncoderWeights::seeded(config);

    Matrix tokens(2, 6);
    SplitMix64 g(123);
    for (std::size_t c = 0; c < 6; ++c) {
        const double v = g.next_symmetric(1.0);
        tokens(0, c) = v;
        tokens(1, c) = v;
    }
    const AttentionOutput out = joint_attention(tokens, weights.layers[0], 3);
    for (const Matrix& head : out.attention) {
        for (double w : head.data) {
            CHECK(w == Catch::Approx(0.5).margin(1e-12));
        }
    }
}

TEST_CASE("joint_attention: rows sum to one on a random batch", "[encoder]") {
    EncoderConfig config;
    config.embed_dim = 8;
    config.num_heads = 2;
    config.weight_seed = 7;
    const EncoderWeights weights = EncoderWeights::seeded(config);
    const Matrix tokens = seeded_matrix(6, 8, 100, 1.0);
    const AttentionOutput out = joint_attention(tokens, weights.layers[0], 2);
    for (const Matrix& head : out.attention) {
        for (std::size_t i = 0; i < head.rows; ++i) {
            double sum = 0.0;
            for (double w : head.row(i)) {
                sum += w;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(joint_attention(Matrix(0, 8), weights.layers[0], 2), std::invalid_argument);
}

TEST_CASE("forward: empty schedule leaves counts constant", "[encoder]") {
    const SegmentLayout layout = small_layout(8);
    EncoderConfig config;
    config.num_layers = 3;
    config.embed_dim = 8;
    config.num_heads = 2;
    config.weight_seed = 42;
    const ForwardResult result = forward(config, EncoderWeights::seeded(config), layout,
                                         seeded_batch(layout, 1), PruningSchedule{});
    REQUIRE(result.traces.size() == 3);
    for (const LayerTrace& trace : result.traces) {
        CHECK(trace.tokens_processed == 17);
        CHECK(trace.prune_events.empty());
    }
    // No pruning: every restored row is a surviving token, none zero-padded.
    for (std::size_t r = 0; r < result.restored_sr.rows; ++r) {
        double norm = 0.0;
        for (double v : result.restored_sr.row(r)) {
            norm += std::abs(v);
        }
        CHECK(norm > 0.0);
    }
}

TEST_CASE("forward: default RGB schedule reproduces the per-layer count vector", "[encoder]") {
    SegmentLayout layout = SegmentLayout::preset("ostrack256");
    layout.embed_dim = 16;  // counts are width-independent
    EncoderConfig config;
    config.num_layers = 12;
    config.embed_dim = 16;
    config.num_heads = 4;
    config.weight_seed = 11;

    PruningSchedule schedule;
    schedule.ce_layers = {3, 6, 9};
    schedule.dte_layers = {4, 7, 10};
    schedule.ste_layers = {4, 7, 10};
    schedule.keep_ratio_sr = 0.7;
    schedule.keep_ratio_dt = 0.7;
    schedule.keep_ratio_st = 0.7;

    const ForwardResult result = forward(config, EncoderWeights::seeded(config), layout,
                                         seeded_batch(layout, 2), schedule);
    const std::vector<std::size_t> expected{384, 384, 384, 308, 270, 270,
                                            216, 190, 190, 153, 135, 135};
    REQUIRE(result.traces.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(result.traces[i].tokens_processed == expected[i]);
    }
    CHECK(result.final_batch.count(Segment::SR) == 89);
    CHECK(result.final_batch.count(Segment::ST) == 23);
    CHECK(result.final_batch.count(Segment::DT) == 23);
    CHECK(result.restored_sr.rows == 256);

    // Exactly 89 nonzero rows survive the restore.
    std::size_t nonzero = 0;
    for (std::size_t r = 0; r < 256; ++r) {
        double norm = 0.0;
        for (double v : result.restored_sr.row(r)) {
            norm += std::abs(v);
        }
        if (norm > 0.0) {
            ++nonzero;
        }
    }
    CHECK(nonzero == 89);

    // The trace events carry CE before DTE before STE at co-located layers.
    CHECK(result.traces[3].prune_events.size() == 2);
    CHECK(result.traces[3].prune_events[0].segment == Segment::DT);
    CHECK(result.traces[3].prune_events[1].segment == Segment::ST);
    CHECK(result.traces[2].prune_events.size() == 1);
    CHECK(result.traces[2].prune_events[0].segment == Segment::SR);
}

TEST_CASE("forward: masked-attention oracle on a seeded 12-token instance", "[encoder]") {
    SegmentLayout layout;
    layout.n_sr = 4;
    layout.sr_grid = {2, 2};
    layout.n_st = 4;
    layout.n_dt = 4;
    layout.tmpl_grid = {2, 2};
    layout.patch_size = 4;
    layout.embed_dim = 8;
    EncoderConfig config;
    config.num_layers = 3;
    config.embed_dim = 8;
    config.num_heads = 2;
    config.weight_seed = 21;

    PruningSchedule schedule;
    schedule.ce_layers = {1, 2};
    schedule.dte_layers = {2};
    schedule.ste_layers = {2};
    schedule.keep_ratio_sr = 0.5;
    schedule.keep_ratio_dt = 0.5;
    schedule.keep_ratio_st = 0.5;

    const TokenBatch batch = seeded_batch(layout, 3);
    const EncoderWeights weights = EncoderWeights::seeded(config);
    const ForwardResult physical = forward(config, weights, layout, batch, schedule);
    const auto masked =
        testing::forward_masked_reference(config, weights, batch, physical.traces);
    CHECK(testing::survivor_max_diff(batch, physical.final_batch, masked) <= 1e-9);
}

TEST_CASE("forward: deterministic traces and outputs across runs", "[encoder]") {
    const SegmentLayout layout = small_layout(8);
    EncoderConfig config;
    config.num_layers = 4;
    config.embed_dim = 8;
    config.num_heads = 2;
    config.weight_seed = 31;
    PruningSchedule schedule;
    schedule.ce_layers = {2, 3};
    schedule.dte_layers = {3};
    schedule.ste_layers = {3};
    schedule.keep_ratio_sr = 0.6;
    schedule.keep_ratio_dt = 0.6;
    schedule.keep_ratio_st = 0.6;

    const EncoderWeights weights = EncoderWeights::seeded(config);
    const ForwardResult a = forward(config, weights, layout, seeded_batch(layout, 4), schedule);
    const ForwardResult b = forward(config, weights, layout, seeded_batch(layout, 4), schedule);
    CHECK(a.restored_sr == b.restored_sr);
    CHECK(a.final_batch.features == b.final_batch.features);
    REQUIRE(a.traces.size() == b.traces.size());
    for (std::size_t i = 0; i < a.traces.size(); ++i) {
        CHECK(a.traces[i].tokens_processed == b.traces[i].tokens_processed);
        REQUIRE(a.traces[i].prune_events.size() == b.traces[i].prune_events.size());
        for (std::size_t e = 0; e < a.traces[i].prune_events.size(); ++e) {
            CHECK(a.traces[i].prune_events[e].kept_original_indices ==
                  b.traces[i].prune_events[e].kept_original_indices);
            CHECK(a.traces[i].prune_events[e].dropped_original_indices ==
                  b.traces[i].prune_events[e].dropped_original_indices);
        }
    }
}

TEST_CASE("forward: text token survives every layer", "[encoder]") {
    const SegmentLayout layout = small_layout(8, 1);
    EncoderConfig config;
    config.num_layers = 4;
    config.embed_dim = 8;
    config.num_heads = 2;
    config.weight_seed = 51;
    PruningSchedule schedule;
    schedule.ce_layers = {1, 2, 3, 4};
    schedule.dte_layers = {1, 2, 3, 4};
    schedule.ste_layers = {1, 2, 3, 4};
    schedule.keep_ratio_sr = 0.5;
    schedule.keep_ratio_dt = 0.5;
    schedule.keep_ratio_st = 0.5;

    ForwardOptions options;
    options.text_guided = true;
    options.text_targets = {Segment::DT};
    const ForwardResult result = forward(config, EncoderWeights::seeded(config), layout,
                                         seeded_batch(layout, 5), schedule, options);
    CHECK(result.final_batch.count(Segment::Text) == 1);
    // Aggressive pruning drives every segment to its floor of one token
    // (center for ST), text untouched.
    CHECK(result.final_batch.count(Segment::SR) == 1);
    CHECK(result.final_batch.count(Segment::ST) == 1);
    const std::size_t center = center_index(layout.tmpl_grid);
    CHECK(result.final_batch.find_token(Segment::ST, center).has_value());
}

TEST_CASE("forward: schedule beyond depth and weight mismatches are errors", "[encoder]") {
    const SegmentLayout layout = small_layout(8);
    EncoderConfig config;
    config.num_layers = 2;
    config.embed_dim = 8;
    config.num_heads = 2;
    PruningSchedule schedule;
    schedule.ce_layers = {3};
    CHECK_THROWS_AS(forward(config, EncoderWeights::seeded(config), layout,
                            seeded_batch(layout, 6), schedule),
                    std::invalid_argument);

    EncoderConfig deeper = config;
    deeper.num_layers = 3;
    CHECK_THROWS_AS(forward(deeper, EncoderWeights::seeded(config), layout,
                            seeded_batch(layout, 6), PruningSchedule{}),
                    std::invalid_argument);
}

TEST_CASE("forward: bonus mode requires a bbox and favors foreground", "[encoder]") {
    const SegmentLayout layout = small_layout(8);
    EncoderConfig config;
    config.num_layers = 2;
    config.embed_dim = 8;
    config.num_heads = 2;
    config.weight_seed = 61;
    PruningSchedule schedule;
    schedule.ste_layers = {1};
    schedule.keep_ratio_st = 0.5;

    ForwardOptions no_box;
    no_box.bonus_mode = BonusMode::Soft;
    CHECK_THROWS_AS(forward(config, EncoderWeights::seeded(config), layout,
                            seeded_batch(layout, 7), schedule, no_box),
                    std::invalid_argument);

    // A box covering only the top-left patch: with the center always kept,
    // the boosted patch must fill one of the two remaining... (k = 2: center
    // plus the boosted token).
    ForwardOptions with_box;
    with_box.bonus_mode = BonusMode::Soft;
    with_box.bonus_weight = 1.0;
    with_box.template_bbox = BBox{0, 0, 4, 4};  // exactly patch 0 of the 2x2 grid
    const ForwardResult result = forward(config, EncoderWeights::seeded(config), layout,
                                         seeded_batch(layout, 7), schedule, with_box);
    const auto& kept = result.traces[0].prune_events[0].kept_original_indices;
    REQUIRE(kept.size() == 2);
    CHECK(std::count(kept.begin(), kept.end(), 0) == 1);  // boosted patch
    CHECK(std::count(kept.begin(), kept.end(), center_index(layout.tmpl_grid)) == 1);
}
