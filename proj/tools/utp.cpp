// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
//
// utp — unified token pruning for one-stream tracking transformers.
//
//   utp schedule  --preset ostrack256-utp --out out/        token table + MACs
//   utp forward   --preset ostrack256-utp --seed 7 --out o/ trace, CSV, fixture, masks
//   utp prune-viz --preset sutrack224-utp --out o/          keep masks only
//   utp calibrate --preset ostrack256 --segment sr --target 89
//   utp verify                                              acceptance criteria

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "utp/run.hpp"
#include "utp/verify.hpp"

namespace {

struct SourceOpts {
    std::string preset;
    std::vector<std::string> config_paths;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool no_prune = false;
    unsigned jobs = 1;
};

void add_source_options(CLI::App* cmd, SourceOpts& opts, bool multi_config) {
    cmd->add_option("--preset", opts.preset,
                    "preset name (ostrack256, ostrack384, sutrack224, sutrack384; "
                    "optional -utp suffix)");
    auto* config = cmd->add_option("--config", opts.config_paths, "JSON config file");
    if (!multi_config) {
        config->expected(0, 1);
    }
    cmd->add_option("--seed", opts.seed, "seed for weights and synthesized inputs");
    cmd->add_option("--out", opts.out_dir, "output directory (overrides io.out_dir)");
    cmd->add_flag("--no-prune", opts.no_prune, "clear all prune events");
    cmd->add_option("--jobs", opts.jobs, "parallel configs in batch mode")
        ->check(CLI::PositiveNumber);
}

utp::RunConfig apply_overrides(utp::RunConfig cfg, const SourceOpts& opts,
                               const std::string& out_dir) {
    if (opts.seed.has_value()) {
        cfg.seed = *opts.seed;
    }
    if (!out_dir.empty()) {
        cfg.io.out_dir = out_dir;
    }
    if (opts.no_prune) {
        cfg.clear_schedule();
    }
    cfg.validate();
    return cfg;
}

std::vector<utp::RunConfig> resolve_configs(const SourceOpts& opts) {
    const bool has_preset = !opts.preset.empty();
    const bool has_config = !opts.config_paths.empty();
    if (has_preset == has_config) {
        throw std::invalid_argument("give exactly one of --preset or --config");
    }
    std::vector<utp::RunConfig> configs;
    if (has_preset) {
        configs.push_back(apply_overrides(utp::RunConfig::preset(opts.preset), opts, opts.out_dir));
        return configs;
    }
    for (const std::string& path : opts.config_paths) {
        std::string out_dir = opts.out_dir;
        if (!out_dir.empty() && opts.config_paths.size() > 1) {
            // Batch runs get isolated per-config directories.
            out_dir = (std::filesystem::path(out_dir) /
                       std::filesystem::path(path).stem().string())
                          .string();
        }
        configs.push_back(apply_overrides(utp::RunConfig::load(path), opts, out_dir));
    }
    return configs;
}

void print_summary(const utp::RunConfig& cfg, const utp::BudgetReport& report) {
    std::printf("layers %zu, tokens %zu vision + %zu text\n", cfg.encoder.num_layers,
                cfg.layout.vision_tokens(), cfg.layout.n_text);
    std::printf("Avg Vis Tok %.0f (%.6f)  Cmp Vis Tok %zu\n", std::round(report.avg_vis_tok),
                report.avg_vis_tok, report.cmp_vis_tok);
    std::printf("MACs %.3fG vs baseline %.3fG  (reduction %.2f%%)\n", report.macs_total / 1e9,
                report.macs_baseline / 1e9, report.reduction_pct);
}

int cmd_schedule(const SourceOpts& opts) {
    const utp::RunConfig cfg = resolve_configs(opts).at(0);
    const utp::BudgetReport report = utp::compute_budget(cfg);
    const auto csv = utp::write_schedule_csv(cfg, report);
    print_summary(cfg, report);
    std::printf("wrote %s\n", csv.string().c_str());
    return 0;
}

int run_forward_batch(const std::vector<utp::RunConfig>& configs, unsigned jobs, bool masks_only) {
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t index = next.fetch_add(1);
            if (index >= configs.size()) {
                return;
            }
            try {
                const auto artifacts = utp::run_forward(configs[index], masks_only);
                std::printf("[%zu] wrote %s (%zu masks)\n", index,
                            artifacts.out_dir.string().c_str(), artifacts.mask_paths.size());
            } catch (const std::exception& e) {
                std::fprintf(stderr, "[%zu] error: %s\n", index, e.what());
                failures.fetch_add(1);
            }
        }
    };
    const unsigned thread_count =
        std::min<std::size_t>(std::max(1u, jobs), configs.size());
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (unsigned t = 0; t < thread_count; ++t) {
        pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
        t.join();
    }
    return failures.load() == 0 ? 0 : 1;
}

int cmd_forward(const SourceOpts& opts, bool masks_only) {
    const auto configs = resolve_configs(opts);
    if (configs.size() > 1) {
        std::vector<std::string> dirs;
        for (const auto& cfg : configs) {
            dirs.push_back(cfg.io.out_dir);
        }
        auto sorted = dirs;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw std::invalid_argument("batch configs must use distinct out_dir values");
        }
    }
    return run_forward_batch(configs, opts.jobs, masks_only);
}

int cmd_calibrate(const SourceOpts& opts, const std::string& segment_name, std::size_t target,
                  const std::string& events_csv) {
    const utp::RunConfig cfg = resolve_configs(opts).at(0);
    const utp::Segment segment = utp::segment_from_string(segment_name);
    std::vector<std::size_t> events;
    if (!events_csv.empty()) {
        std::size_t value = 0;
        for (char c : events_csv + ",") {
            if (c == ',') {
                events.push_back(value);
                value = 0;
            } else if (c >= '0' && c <= '9') {
                value = value * 10 + static_cast<std::size_t>(c - '0');
            } else {
                throw std::invalid_argument("--events expects a comma-separated layer list");
            }
        }
    } else {
        switch (segment) {
            case utp::Segment::SR: events = cfg.schedule.ce_layers; break;
            case utp::Segment::DT: events = cfg.schedule.dte_layers; break;
            case utp::Segment::ST: events = cfg.schedule.ste_layers; break;
            case utp::Segment::Text: break;
        }
    }
    const auto hits = utp::calibrate_keep_ratios(cfg.layout, cfg.encoder.num_layers, segment,
                                                 events, target);
    std::printf("segment=%s events=%zu target=%zu\n", utp::to_string(segment), events.size(),
                target);
    if (hits.empty()) {
        std::printf("no matching configuration in the grid\n");
        return 0;
    }
    for (const utp::CalibrationHit& hit : hits) {
        std::printf("ratio=%.2f rounding=%s\n", hit.ratio, utp::to_string(hit.rounding));
    }
    return 0;
}

int cmd_verify() {
    const auto results = utp::run_acceptance_checks();
    return utp::print_check_table(std::cout, results) == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unified token pruning engine and desk-scale one-stream encoder"};
    app.require_subcommand(1);

    SourceOpts schedule_opts;
    auto* schedule_cmd = app.add_subcommand("schedule", "per-layer token counts and MAC budget");
    add_source_options(schedule_cmd, schedule_opts, false);

    SourceOpts forward_opts;
    auto* forward_cmd = app.add_subcommand("forward", "run the encoder and write all artifacts");
    add_source_options(forward_cmd, forward_opts, true);

    SourceOpts viz_opts;
    auto* viz_cmd = app.add_subcommand("prune-viz", "run the encoder and write keep masks only");
    add_source_options(viz_cmd, viz_opts, true);

    SourceOpts calibrate_opts;
    std::string segment_name;
    std::string events_csv;
    std::size_t target = 0;
    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "grid-search keep ratios for a target final count");
    add_source_options(calibrate_cmd, calibrate_opts, false);
    calibrate_cmd->add_option("--segment", segment_name, "segment to calibrate (sr, dt, st)")
        ->required();
    calibrate_cmd->add_option("--target", target, "target final token count")->required();
    calibrate_cmd->add_option("--events", events_csv,
                              "comma-separated prune layers (default: the config's schedule)");

    auto* verify_cmd = app.add_subcommand("verify", "run the acceptance criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (schedule_cmd->parsed()) {
            return cmd_schedule(schedule_opts);
        }
        if (forward_cmd->parsed()) {
            return cmd_forward(forward_opts, false);
        }
        if (viz_cmd->parsed()) {
            return cmd_forward(viz_opts, true);
        }
        if (calibrate_cmd->parsed()) {
            return cmd_calibrate(calibrate_opts, segment_name, target, events_csv);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify();
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
