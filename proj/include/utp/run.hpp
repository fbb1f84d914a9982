// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "utp/config.hpp"
#include "utp/encoder.hpp"
#include "utp/fixture.hpp"
#include "utp/pgm.hpp"

namespace utp {

namespace detail {

// Fixed stream ids for seed derivation, so every artifact is reproducible
// from the single config seed.
inline constexpr std::uint64_t kWeightStream = 0;
inline constexpr std::uint64_t kSrStream = 1;
inline constexpr std::uint64_t kStStream = 2;
inline constexpr std::uint64_t kDtStream = 3;
inline constexpr std::uint64_t kTextStream = 4;

inline Matrix segment_features(const RunConfig& cfg, const std::optional<std::string>& fixture,
                               std::size_t rows, std::uint64_t stream, const char* name) {
    if (fixture.has_value()) {
        Matrix m = read_utpf(*fixture);
        UTP_REQUIRE(m.rows == rows && m.cols == cfg.layout.embed_dim,
                    name, " fixture is ", m.rows, "x", m.cols, ", expected ",
                    rows, "x", cfg.layout.embed_dim);
        return m;
    }
    return seeded_matrix(rows, cfg.layout.embed_dim, derive_seed(cfg.seed, stream), 1.0);
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

inline TokenBatch build_input_batch(const RunConfig& cfg) {
    const Matrix sr = detail::segment_features(cfg, cfg.io.sr_fixture, cfg.layout.n_sr,
                                               detail::kSrStream, "sr");
    const Matrix st = detail::segment_features(cfg, cfg.io.st_fixture, cfg.layout.n_st,
                                               detail::kStStream, "st");
    const Matrix dt = detail::segment_features(cfg, cfg.io.dt_fixture, cfg.layout.n_dt,
                                               detail::kDtStream, "dt");
    if (cfg.layout.n_text == 1) {
        const Matrix text = detail::segment_features(cfg, cfg.io.text_fixture, 1,
                                                     detail::kTextStream, "text");
        return assemble_batch(cfg.layout, sr, st, dt, &text);
    }
    return assemble_batch(cfg.layout, sr, st, dt);
}

inline EncoderWeights build_weights(const RunConfig& cfg) {
    EncoderConfig ec = cfg.encoder;
    ec.weight_seed = derive_seed(cfg.seed, detail::kWeightStream);
    return EncoderWeights::seeded(ec);
}

inline BudgetReport compute_budget(const RunConfig& cfg) {
    return make_budget_report(cfg.layout, cfg.encoder.num_layers, cfg.encoder.embed_dim,
                              cfg.encoder.mlp_ratio, cfg.schedule);
}

/// Writes the per-layer token table plus a summary row; returns the CSV path.
inline std::filesystem::path write_schedule_csv(const RunConfig& cfg, const BudgetReport& report) {
    const std::filesystem::path dir(cfg.io.out_dir);
    std::filesystem::create_directories(dir);
    const auto counts = token_schedule(cfg.layout, cfg.encoder.num_layers, cfg.schedule);
    const std::filesystem::path path = dir / "schedule.csv";
    std::ofstream os(path, std::ios::binary);
    UTP_REQUIRE(os.good(), "schedule: cannot write ", path.string());
    os << "layer,sr,st,dt,text,vision,total\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const SegmentCounts& c = counts[i];
        os << (i + 1) << "," << c.sr << "," << c.st << "," << c.dt << "," << cfg.layout.n_text
           << "," << c.vision() << "," << (c.vision() + cfg.layout.n_text) << "\n";
    }
    os << "summary,avg_vis_tok=" << detail::format_double(report.avg_vis_tok)
       << ",cmp_vis_tok=" << report.cmp_vis_tok
       << ",macs_g=" << detail::format_double(report.macs_total / 1e9)
       << ",macs_baseline_g=" << detail::format_double(report.macs_baseline / 1e9)
       << ",reduction_pct=" << detail::format_double(report.reduction_pct) << ",\n";
    return path;
}

/// One visualization stage: a layer at which pruning fired, in layer order.
struct MaskStage {
    std::size_t stage = 0;  // 1-based
    std::size_t layer = 0;
    std::vector<PruneDecision> events;
};

inline std::vector<MaskStage> collect_stages(const std::vector<LayerTrace>& traces) {
    std::vector<MaskStage> stages;
    for (const LayerTrace& trace : traces) {
        if (trace.prune_events.empty()) {
            continue;
        }
        stages.push_back({stages.size() + 1, trace.layer_index, trace.prune_events});
    }
    return stages;
}

namespace detail {

inline std::vector<std::uint8_t> alive_pixels(const std::vector<bool>& alive) {
    std::vector<std::uint8_t> px(alive.size());
    for (std::size_t i = 0; i < alive.size(); ++i) {
        px[i] = alive[i] ? 255 : 0;
    }
    return px;
}

inline std::vector<std::uint8_t> template_pair_pixels(const std::vector<bool>& st_alive,
                                                      const std::vector<bool>& dt_alive,
                                                      GridShape grid) {
    // [ST | DT] side by side, matching the usual template-pair rendering.
    std::vector<std::uint8_t> px(grid.rows * grid.cols * 2);
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
            px[r * grid.cols * 2 + c] = st_alive[r * grid.cols + c] ? 255 : 0;
            px[r * grid.cols * 2 + grid.cols + c] = dt_alive[r * grid.cols + c] ? 255 : 0;
        }
    }
    return px;
}

}  // namespace detail

/// Writes keep-mask PGMs (kept=255, pruned=0): one image per stage for the
/// search region, one per stage for the templates (a single side-by-side
/// [ST | DT] image when both are pruned at the same stage), plus final masks
/// for all three segments. Returns the written paths.
inline std::vector<std::filesystem::path> write_keep_masks(const RunConfig& cfg,
                                                           const std::vector<LayerTrace>& traces) {
    const std::filesystem::path dir = std::filesystem::path(cfg.io.out_dir) / "masks";
    std::filesystem::create_directories(dir);

    std::map<Segment, std::vector<bool>> alive;
    alive[Segment::SR] = std::vector<bool>(cfg.layout.n_sr, true);
    alive[Segment::ST] = std::vector<bool>(cfg.layout.n_st, true);
    alive[Segment::DT] = std::vector<bool>(cfg.layout.n_dt, true);

    std::vector<std::filesystem::path> written;
    auto write_grid = [&](const std::filesystem::path& path, Segment seg) {
        const GridShape grid = seg == Segment::SR ? cfg.layout.sr_grid : cfg.layout.tmpl_grid;
        write_pgm(path, grid.cols, grid.rows, detail::alive_pixels(alive[seg]));
        written.push_back(path);
    };

    for (const MaskStage& stage : collect_stages(traces)) {
        bool pruned_sr = false;
        bool pruned_st = false;
        bool pruned_dt = false;
        for (const PruneDecision& event : stage.events) {
            for (std::size_t orig : event.dropped_original_indices) {
                alive[event.segment][orig] = false;
            }
            pruned_sr |= event.segment == Segment::SR;
            pruned_st |= event.segment == Segment::ST;
            pruned_dt |= event.segment == Segment::DT;
        }
        const std::string prefix = "stage" + std::to_string(stage.stage) + "_";
        if (pruned_sr) {
            write_grid(dir / (prefix + "sr.pgm"), Segment::SR);
        }
        if (pruned_st && pruned_dt) {
            const GridShape grid = cfg.layout.tmpl_grid;
            const auto px = detail::template_pair_pixels(alive[Segment::ST], alive[Segment::DT], grid);
            const std::filesystem::path path = dir / (prefix + "tmpl.pgm");
            write_pgm(path, grid.cols * 2, grid.rows, px);
            written.push_back(path);
        } else if (pruned_st) {
            write_grid(dir / (prefix + "st.pgm"), Segment::ST);
        } else if (pruned_dt) {
            write_grid(dir / (prefix + "dt.pgm"), Segment::DT);
        }
    }

    write_grid(dir / "final_sr.pgm", Segment::SR);
    write_grid(dir / "final_st.pgm", Segment::ST);
    write_grid(dir / "final_dt.pgm", Segment::DT);
    return written;
}

inline ordered_json trace_to_json(const ForwardResult& result) {
    ordered_json j;
    j["layers"] = ordered_json::array();
    for (const LayerTrace& trace : result.traces) {
        ordered_json jl;
        jl["layer"] = trace.layer_index;
        jl["tokens_processed"] = trace.tokens_processed;
        jl["events"] = ordered_json::array();
        for (const PruneDecision& event : trace.prune_events) {
            jl["events"].push_back({
                {"segment", to_string(event.segment)},
                {"kept", event.kept_original_indices},
                {"dropped", event.dropped_original_indices},
            });
        }
        j["layers"].push_back(std::move(jl));
    }
    j["final_counts"] = {
        {"sr", result.final_batch.count(Segment::SR)},
        {"st", result.final_batch.count(Segment::ST)},
        {"dt", result.final_batch.count(Segment::DT)},
        {"text", result.final_batch.count(Segment::Text)},
    };
    return j;
}

/// Writes the kept-index map: one row per surviving token per prune stage.
inline std::filesystem::path write_kept_indices_csv(const RunConfig& cfg,
                                                    const std::vector<LayerTrace>& traces) {
    const std::filesystem::path path = std::filesystem::path(cfg.io.out_dir) / "kept_indices.csv";
    std::ofstream os(path, std::ios::binary);
    UTP_REQUIRE(os.good(), "forward: cannot write ", path.string());
    os << "stage,layer,segment,original_index,grid_row,grid_col\n";
    for (const MaskStage& stage : collect_stages(traces)) {
        for (const PruneDecision& event : stage.events) {
            const GridShape grid =
                event.segment == Segment::SR ? cfg.layout.sr_grid : cfg.layout.tmpl_grid;
            for (std::size_t orig : event.kept_original_indices) {
                os << stage.stage << "," << stage.layer << "," << to_string(event.segment) << ","
                   << orig << "," << (orig / grid.cols) << "," << (orig % grid.cols) << "\n";
            }
        }
    }
    return path;
}

struct ForwardArtifacts {
    ForwardResult result;
    std::filesystem::path out_dir;
    std::filesystem::path config_path;
    std::filesystem::path trace_path;
    std::filesystem::path kept_csv_path;
    std::filesystem::path restored_path;
    std::vector<std::filesystem::path> mask_paths;
};

/// Runs the encoder for a config and writes every forward artifact under
/// io.out_dir. With masks_only, only config.json and the keep masks are
/// emitted (the prune-viz subcommand).
inline ForwardArtifacts run_forward(const RunConfig& cfg, bool masks_only = false) {
    cfg.validate();
    ForwardArtifacts artifacts;
    artifacts.out_dir = cfg.io.out_dir;
    std::filesystem::create_directories(artifacts.out_dir);

    const TokenBatch batch = build_input_batch(cfg);
    const EncoderWeights weights = build_weights(cfg);
    artifacts.result = forward(cfg.encoder, weights, cfg.layout, batch, cfg.schedule,
                               cfg.forward_options());

    artifacts.config_path = artifacts.out_dir / "config.json";
    cfg.save(artifacts.config_path);
    artifacts.mask_paths = write_keep_masks(cfg, artifacts.result.traces);
    if (!masks_only) {
        artifacts.trace_path = artifacts.out_dir / "trace.json";
        std::ofstream os(artifacts.trace_path, std::ios::binary);
        UTP_REQUIRE(os.good(), "forward: cannot write ", artifacts.trace_path.string());
        os << trace_to_json(artifacts.result).dump(2) << "\n";
        artifacts.kept_csv_path = write_kept_indices_csv(cfg, artifacts.result.traces);
        artifacts.restored_path = artifacts.out_dir / "restored_sr.utpf";
        write_utpf(artifacts.restored_path, artifacts.result.restored_sr);
    }
    return artifacts;
}

}  // namespace utp
