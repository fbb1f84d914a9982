// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "utp/layout.hpp"
#include "utp/matrix.hpp"

namespace utp {

/// Importance of each token of one segment, aligned to the segment's current
/// order in the batch. With no bonus or text fusion applied the scores are a
/// head-averaged slice of softmax rows, hence nonnegative and summing to 1.
struct ImportanceScores {
    Segment segment = Segment::SR;
    std::vector<double> scores;
    std::size_t head_count = 1;
};

/// Outcome of one prune event, recorded in original grid indices.
struct PruneDecision {
    Segment segment = Segment::SR;
    std::vector<std::size_t> kept_original_indices;
    std::vector<std::size_t> dropped_original_indices;
};

namespace detail {

/// Head-averaged attention of one query position over a segment's columns,
/// with each head's restricted row renormalized to sum to 1.
inline ImportanceScores query_row_scores(const std::vector<Matrix>& attention,
                                         const TokenBatch& batch, std::size_t query_pos,
                                         Segment target) {
    UTP_REQUIRE(!attention.empty(), "scoring: attention stack is empty");
    auto [begin, end] = batch.segment_range(target);
    UTP_REQUIRE(end > begin, "scoring: segment ", to_string(target), " has no tokens");

    ImportanceScores result;
    result.segment = target;
    result.head_count = attention.size();
    result.scores.assign(end - begin, 0.0);
    for (const Matrix& head : attention) {
        UTP_REQUIRE(head.rows == batch.size() && head.cols == batch.size(),
                    "scoring: attention is ", head.rows, "x", head.cols,
                    " but batch has ", batch.size(), " tokens");
        auto row = head.row(query_pos);
        double slice_sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            slice_sum += row[i];
        }
        for (std::size_t i = begin; i < end; ++i) {
            result.scores[i - begin] += row[i] / slice_sum;
        }
    }
    for (double& s : result.scores) {
        s /= static_cast<double>(result.head_count);
    }
    return result;
}

}  // namespace detail

/// Importance of the target segment's tokens as seen from the static
/// template's center token: its attention row, restricted to the target
/// columns, renormalized per head and averaged over heads.
inline ImportanceScores score_segment(const std::vector<Matrix>& attention,
                                      const TokenBatch& batch, const SegmentLayout& layout,
                                      Segment target) {
    UTP_REQUIRE(target == Segment::SR || target == Segment::DT || target == Segment::ST,
                "score_segment: target must be sr, dt, or st");
    const std::size_t center = center_index(layout.tmpl_grid);
    auto pos = batch.find_token(Segment::ST, center);
    UTP_REQUIRE(pos.has_value(),
                "score_segment: static template center token ", center,
                " is absent (illegal prior prune)");
    return detail::query_row_scores(attention, batch, *pos, target);
}

/// Same extraction with the text token as the query.
inline ImportanceScores text_query_scores(const std::vector<Matrix>& attention,
                                          const TokenBatch& batch, Segment target) {
    auto [begin, end] = batch.segment_range(Segment::Text);
    UTP_REQUIRE(end == begin + 1, "text_query_scores: batch has no text token");
    return detail::query_row_scores(attention, batch, begin, target);
}

/// Sums the text-token attention row into the base scores, elementwise.
inline ImportanceScores fuse_text(const ImportanceScores& base, std::span<const double> text_row) {
    UTP_REQUIRE(base.scores.size() == text_row.size(),
                "fuse_text: ", base.scores.size(), " scores vs text row of ", text_row.size());
    ImportanceScores fused = base;
    for (std::size_t i = 0; i < fused.scores.size(); ++i) {
        fused.scores[i] += text_row[i];
    }
    return fused;
}

/// Adds weight * bonus[original_index] to each score. The bonus applies to
/// static-template elimination only.
inline ImportanceScores apply_bonus(const ImportanceScores& base, const ForegroundBonus& bonus,
                                    const TokenBatch& batch) {
    if (bonus.mode == BonusMode::Off) {
        return base;
    }
    UTP_REQUIRE(base.segment == Segment::ST,
                "apply_bonus: bonus applies to the static template, not ", to_string(base.segment));
    auto [begin, end] = batch.segment_range(Segment::ST);
    UTP_REQUIRE(end - begin == base.scores.size(),
                "apply_bonus: ", base.scores.size(), " scores vs ", end - begin, " ST tokens");
    ImportanceScores out = base;
    for (std::size_t i = begin; i < end; ++i) {
        const std::size_t orig = batch.original_index[i];
        UTP_REQUIRE(orig < bonus.values.size(),
                    "apply_bonus: original index ", orig, " outside ", bonus.values.size(), " patches");
        out.scores[i - begin] += bonus.weight * bonus.values[orig];
    }
    return out;
}

/// Keeps the ceil(keep_ratio * count) best-scored tokens of the target
/// segment, preserving relative order; other segments pass through untouched.
/// Static-template prunes always retain the center token.
inline std::pair<TokenBatch, PruneDecision> prune(const TokenBatch& batch,
                                                  const ImportanceScores& scores,
                                                  double keep_ratio,
                                                  const SegmentLayout& layout) {
    UTP_REQUIRE(keep_ratio > 0.0 && keep_ratio <= 1.0,
                "prune: keep_ratio must be in (0, 1], got ", keep_ratio);
    const Segment target = scores.segment;
    UTP_REQUIRE(target != Segment::Text, "prune: the text token is never pruned");
    auto [begin, end] = batch.segment_range(target);
    const std::size_t count = end - begin;
    UTP_REQUIRE(count > 0, "prune: segment ", to_string(target), " has no tokens");
    UTP_REQUIRE(scores.scores.size() == count,
                "prune: ", scores.scores.size(), " scores vs ", count, " tokens");

    const std::size_t kept_target = keep_count(keep_ratio, count);
    std::vector<std::size_t> kept_local;  // segment-local positions
    if (target == Segment::ST) {
        const std::size_t center = center_index(layout.tmpl_grid);
        std::size_t center_local = count;
        for (std::size_t i = begin; i < end; ++i) {
            if (batch.original_index[i] == center) {
                center_local = i - begin;
                break;
            }
        }
        UTP_REQUIRE(center_local < count,
                    "prune: static template center token ", center, " is absent");
        // Center is force-kept; remaining slots go to the top-scored others.
        std::vector<std::size_t> order;
        order.reserve(count - 1);
        for (std::size_t i = 0; i < count; ++i) {
            if (i != center_local) order.push_back(i);
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores.scores[a] != scores.scores[b]) {
                return scores.scores[a] > scores.scores[b];
            }
            return a < b;
        });
        order.resize(kept_target - 1);
        order.push_back(center_local);
        std::sort(order.begin(), order.end());
        kept_local = std::move(order);
    } else {
        kept_local = topk_indices(scores.scores, kept_target);
    }

    PruneDecision decision;
    decision.segment = target;
    std::vector<bool> keep_flag(count, false);
    for (std::size_t local : kept_local) {
        keep_flag[local] = true;
    }
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t orig = batch.original_index[begin + i];
        (keep_flag[i] ? decision.kept_original_indices : decision.dropped_original_indices)
            .push_back(orig);
    }
    std::sort(decision.kept_original_indices.begin(), decision.kept_original_indices.end());
    std::sort(decision.dropped_original_indices.begin(), decision.dropped_original_indices.end());

    TokenBatch pruned;
    pruned.features = Matrix(batch.size() - (count - kept_local.size()), batch.features.cols);
    pruned.segment_tag.reserve(pruned.features.rows);
    pruned.original_index.reserve(pruned.features.rows);
    std::size_t row = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (i >= begin && i < end && !keep_flag[i - begin]) {
            continue;
        }
        std::copy(batch.features.row(i).begin(), batch.features.row(i).end(),
                  pruned.features.row(row).begin());
        pruned.segment_tag.push_back(batch.segment_tag[i]);
        pruned.original_index.push_back(batch.original_index[i]);
        ++row;
    }
    return {std::move(pruned), std::move(decision)};
}

/// Scatters surviving search-region tokens back to their original grid slots
/// and zero-pads pruned slots, restoring the spatial layout for a downstream
/// head. Template and text tokens are not emitted.
inline Matrix restore_and_pad(const TokenBatch& batch, const SegmentLayout& layout) {
    UTP_REQUIRE(batch.features.cols == layout.embed_dim,
                "restore_and_pad: features are ", batch.features.cols,
                "-d but layout expects ", layout.embed_dim);
    Matrix restored(layout.n_sr, layout.embed_dim);
    std::vector<bool> seen(layout.n_sr, false);
    auto [begin, end] = batch.segment_range(Segment::SR);
    for (std::size_t i = begin; i < end; ++i) {
        const std::size_t orig = batch.original_index[i];
        UTP_REQUIRE(orig < layout.n_sr,
                    "restore_and_pad: original index ", orig, " outside grid of ", layout.n_sr);
        UTP_REQUIRE(!seen[orig], "restore_and_pad: duplicate original index ", orig);
        seen[orig] = true;
        std::copy(batch.features.row(i).begin(), batch.features.row(i).end(),
                  restored.row(orig).begin());
    }
    return restored;
}

}  // namespace utp
