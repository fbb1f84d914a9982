// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "utp/budget.hpp"
#include "utp/ctem.hpp"
#include "utp/layout.hpp"
#include "utp/matrix.hpp"
#include "utp/rng.hpp"

namespace utp {

/// Desk-scale pre-norm transformer over the joint [SR | ST | DT | text]
/// sequence. Only depth and token geometry of the base trackers are emulated;
/// weights are seeded, never pretrained.
struct EncoderConfig {
    std::size_t num_layers = 12;
    std::size_t embed_dim = 768;
    std::size_t num_heads = 12;
    double mlp_ratio = 4.0;
    std::uint64_t weight_seed = 0;

    std::size_t head_dim() const { return embed_dim / num_heads; }

    void validate() const {
        UTP_REQUIRE(num_layers >= 1, "encoder: num_layers must be >= 1");
        UTP_REQUIRE(num_heads >= 1, "encoder: num_heads must be >= 1");
        UTP_REQUIRE(embed_dim >= 1 && embed_dim % num_heads == 0,
                    "encoder: embed_dim ", embed_dim, " not divisible by ", num_heads, " heads");
        UTP_REQUIRE(mlp_ratio > 0.0, "encoder: mlp_ratio must be positive");
    }

    static EncoderConfig preset(std::string_view name) {
        EncoderConfig c;
        if (name == "ostrack256" || name == "ostrack384") {
            c.num_layers = 12;
            c.embed_dim = 768;
            c.num_heads = 12;
        } else if (name == "sutrack224" || name == "sutrack384") {
            c.num_layers = 24;
            c.embed_dim = 512;
            c.num_heads = 8;
        } else {
            throw std::invalid_argument(detail::cat(
                "unknown encoder preset '", name,
                "' (expected ostrack256, ostrack384, sutrack224, sutrack384)"));
        }
        return c;
    }

    bool operator==(const EncoderConfig&) const = default;
};

struct LayerWeights {
    Matrix query;     // dim x dim
    Matrix key;       // dim x dim
    Matrix value;     // dim x dim
    Matrix out_proj;  // dim x dim
    Matrix mlp_in;    // dim x hidden
    Matrix mlp_out;   // hidden x dim
};

struct EncoderWeights {
    std::vector<LayerWeights> layers;

    /// Symmetric zero-mean initialization, scale 1/sqrt(fan_in).
    static EncoderWeights seeded(const EncoderConfig& config) {
        config.validate();
        const std::size_t dim = config.embed_dim;
        const auto hidden = static_cast<std::size_t>(config.mlp_ratio * static_cast<double>(dim));
        EncoderWeights w;
        w.layers.reserve(config.num_layers);
        for (std::size_t layer = 0; layer < config.num_layers; ++layer) {
            const std::uint64_t base = derive_seed(config.weight_seed, layer);
            const double s_dim = 1.0 / std::sqrt(static_cast<double>(dim));
            const double s_hidden = 1.0 / std::sqrt(static_cast<double>(hidden));
            LayerWeights lw;
            lw.query = seeded_matrix(dim, dim, derive_seed(base, 0), s_dim);
            lw.key = seeded_matrix(dim, dim, derive_seed(base, 1), s_dim);
            lw.value = seeded_matrix(dim, dim, derive_seed(base, 2), s_dim);
            lw.out_proj = seeded_matrix(dim, dim, derive_seed(base, 3), s_dim);
            lw.mlp_in = seeded_matrix(dim, hidden, derive_seed(base, 4), s_dim);
            lw.mlp_out = seeded_matrix(hidden, dim, derive_seed(base, 5), s_hidden);
            w.layers.push_back(std::move(lw));
        }
        return w;
    }
};

/// Per-layer record: the token count the layer processed and the prune
/// decisions fired after it.
struct LayerTrace {
    std::size_t layer_index = 0;  // 1-based
    std::size_t tokens_processed = 0;
    std::vector<PruneDecision> prune_events;
};

inline Matrix layer_norm_rows(const Matrix& m, double eps = 1e-6) {
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto in_row = m.row(i);
        double mean = 0.0;
        for (double v : in_row) {
            mean += v;
        }
        mean /= static_cast<double>(m.cols);
        double var = 0.0;
        for (double v : in_row) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(m.cols);
        const double inv = 1.0 / std::sqrt(var + eps);
        auto out_row = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            out_row[j] = (in_row[j] - mean) * inv;
        }
    }
    return out;
}

inline double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

struct AttentionOutput {
    Matrix context;                 // tokens x dim, heads concatenated, before out_proj
    std::vector<Matrix> attention;  // per head, tokens x tokens
};

/// Multi-head attention over the full current sequence, scaled by
/// 1/sqrt(head_dim). Returns the pre-projection context and the per-head
/// attention stack reused for importance scoring.
inline AttentionOutput joint_attention(const Matrix& tokens, const LayerWeights& w,
                                       std::size_t num_heads) {
    const std::size_t n = tokens.rows;
    const std::size_t dim = tokens.cols;
    UTP_REQUIRE(n >= 1, "joint_attention: batch is empty");
    UTP_REQUIRE(num_heads >= 1 && dim % num_heads == 0,
                "joint_attention: dim ", dim, " not divisible by ", num_heads, " heads");
    UTP_REQUIRE(w.query.rows == dim && w.query.cols == dim &&
                    w.key.rows == dim && w.key.cols == dim &&
                    w.value.rows == dim && w.value.cols == dim,
                "joint_attention: projection weights do not match dim ", dim);

    const Matrix q = matmul(tokens, w.query);
    const Matrix k = matmul(tokens, w.key);
    const Matrix v = matmul(tokens, w.value);
    const std::size_t head_dim = dim / num_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    AttentionOutput out;
    out.context = Matrix(n, dim);
    out.attention.reserve(num_heads);
    Matrix q_h(n, head_dim);
    Matrix k_h(n, head_dim);
    Matrix v_h(n, head_dim);
    for (std::size_t h = 0; h < num_heads; ++h) {
        const std::size_t offset = h * head_dim;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < head_dim; ++j) {
                q_h(i, j) = q(i, offset + j);
                k_h(i, j) = k(i, offset + j);
                v_h(i, j) = v(i, offset + j);
            }
        }
        Matrix logits = matmul(q_h, transpose(k_h));
        for (double& l : logits.data) {
            l *= scale;
        }
        Matrix weights = softmax_rows(logits);
        const Matrix ctx = matmul(weights, v_h);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < head_dim; ++j) {
                out.context(i, offset + j) = ctx(i, j);
            }
        }
        out.attention.push_back(std::move(weights));
    }
    return out;
}

inline AttentionOutput joint_attention(const TokenBatch& batch, const LayerWeights& w,
                                       std::size_t num_heads) {
    return joint_attention(batch.features, w, num_heads);
}

struct ForwardOptions {
    BonusMode bonus_mode = BonusMode::Off;
    double bonus_weight = 1.0;
    std::optional<BBox> template_bbox;
    bool text_guided = false;
    std::vector<Segment> text_targets = {Segment::DT};
};

struct ForwardResult {
    Matrix restored_sr;
    std::vector<LayerTrace> traces;
    TokenBatch final_batch;
};

/// Runs the encoder over the batch, firing scheduled prune events after each
/// layer's attention + MLP (CE, then DTE, then STE when co-located). Scores
/// for all of a layer's events come from that layer's attention stack, taken
/// before any of them removes rows. The returned matrix is the zero-padded
/// restoration of the surviving search-region tokens.
inline ForwardResult forward(const EncoderConfig& config, const EncoderWeights& weights,
                             const SegmentLayout& layout, TokenBatch batch,
                             const PruningSchedule& schedule, const ForwardOptions& options = {}) {
    config.validate();
    layout.validate();
    schedule.validate(config.num_layers);
    UTP_REQUIRE(weights.layers.size() == config.num_layers,
                "forward: ", weights.layers.size(), " weight layers vs ", config.num_layers);
    UTP_REQUIRE(batch.features.cols == config.embed_dim,
                "forward: batch is ", batch.features.cols, "-d, encoder expects ", config.embed_dim);
    UTP_REQUIRE(layout.embed_dim == config.embed_dim,
                "forward: layout embed_dim ", layout.embed_dim, " vs encoder ", config.embed_dim);
    UTP_REQUIRE(batch.size() >= 1, "forward: batch is empty");

    ForegroundBonus bonus;
    if (options.bonus_mode != BonusMode::Off) {
        UTP_REQUIRE(options.template_bbox.has_value(),
                    "forward: bonus mode needs a template bounding box");
        bonus = make_foreground_bonus(*options.template_bbox, layout, options.bonus_mode,
                                      options.bonus_weight);
    }
    if (options.text_guided) {
        UTP_REQUIRE(batch.count(Segment::Text) == 1,
                    "forward: text guidance needs a text token in the batch");
        UTP_REQUIRE(!options.text_targets.empty(), "forward: text guidance has no targets");
        for (Segment target : options.text_targets) {
            UTP_REQUIRE(target != Segment::Text,
                        "forward: text guidance cannot target the text token");
        }
    }
    auto text_targeted = [&](Segment s) {
        if (!options.text_guided) {
            return false;
        }
        return std::find(options.text_targets.begin(), options.text_targets.end(), s) !=
               options.text_targets.end();
    };
    auto scheduled = [](const std::vector<std::size_t>& layers, std::size_t layer) {
        return std::binary_search(layers.begin(), layers.end(), layer);
    };

    ForwardResult result;
    result.traces.reserve(config.num_layers);
    for (std::size_t layer = 1; layer <= config.num_layers; ++layer) {
        LayerTrace trace;
        trace.layer_index = layer;
        trace.tokens_processed = batch.size();

        const LayerWeights& w = weights.layers[layer - 1];
        const AttentionOutput att = joint_attention(layer_norm_rows(batch.features), w,
                                                    config.num_heads);
        batch.features = add(batch.features, matmul(att.context, w.out_proj));
        Matrix hidden = matmul(layer_norm_rows(batch.features), w.mlp_in);
        for (double& v : hidden.data) {
            v = gelu(v);
        }
        batch.features = add(batch.features, matmul(hidden, w.mlp_out));

        struct Event {
            Segment segment;
            double ratio;
        };
        std::vector<Event> events;
        if (scheduled(schedule.ce_layers, layer)) {
            events.push_back({Segment::SR, schedule.keep_ratio_sr});
        }
        if (scheduled(schedule.dte_layers, layer)) {
            events.push_back({Segment::DT, schedule.keep_ratio_dt});
        }
        if (scheduled(schedule.ste_layers, layer)) {
            events.push_back({Segment::ST, schedule.keep_ratio_st});
        }

        // Score every co-located event against the same pre-prune batch, then
        // apply the prunes in CE -> DTE -> STE order.
        std::vector<ImportanceScores> scores;
        scores.reserve(events.size());
        for (const Event& event : events) {
            ImportanceScores s = score_segment(att.attention, batch, layout, event.segment);
            if (text_targeted(event.segment)) {
                s = fuse_text(s, text_query_scores(att.attention, batch, event.segment).scores);
            }
            if (event.segment == Segment::ST && options.bonus_mode != BonusMode::Off) {
                s = apply_bonus(s, bonus, batch);
            }
            scores.push_back(std::move(s));
        }
        for (std::size_t e = 0; e < events.size(); ++e) {
            auto [pruned, decision] = prune(batch, scores[e], events[e].ratio, layout);
            batch = std::move(pruned);
            trace.prune_events.push_back(std::move(decision));
        }
        result.traces.push_back(std::move(trace));
    }

    result.restored_sr = restore_and_pad(batch, layout);
    result.final_batch = std::move(batch);
    return result;
}

}  // namespace utp
