// Copyright (C) 2026 UTP Contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "utp/budget.hpp"
#include "utp/encoder.hpp"
#include "utp/layout.hpp"

namespace utp {

using ordered_json = nlohmann::ordered_json;

struct BonusConfig {
    BonusMode mode = BonusMode::Off;
    double weight = 1.0;
    std::optional<BBox> bbox;

    bool operator==(const BonusConfig&) const = default;
};

struct TextGuidanceConfig {
    bool enabled = false;
    std::vector<Segment> targets = {Segment::DT};
    bool dummy_text = true;  // synthesize the text row instead of loading one

    bool operator==(const TextGuidanceConfig&) const = default;
};

struct IoConfig {
    std::string out_dir = "out";
    std::optional<std::string> sr_fixture;
    std::optional<std::string> st_fixture;
    std::optional<std::string> dt_fixture;
    std::optional<std::string> text_fixture;

    bool operator==(const IoConfig&) const = default;
};

/// Full run description. Presets expand to explicit values on load, so every
/// emitted config is self-describing.
struct RunConfig {
    SegmentLayout layout;
    EncoderConfig encoder;
    PruningSchedule schedule;
    BonusConfig bonus;
    TextGuidanceConfig text_guidance;
    std::uint64_t seed = 0;
    IoConfig io;

    bool operator==(const RunConfig&) const = default;

    void clear_schedule() {
        schedule.ce_layers.clear();
        schedule.dte_layers.clear();
        schedule.ste_layers.clear();
    }

    void validate() const {
        layout.validate();
        encoder.validate();
        UTP_REQUIRE(layout.embed_dim == encoder.embed_dim,
                    "config: layout embed_dim ", layout.embed_dim,
                    " vs encoder embed_dim ", encoder.embed_dim);
        schedule.validate(encoder.num_layers);
        if (bonus.mode != BonusMode::Off) {
            UTP_REQUIRE(bonus.bbox.has_value(), "config: bonus mode set but no bbox given");
            bonus.bbox->validate(layout.template_side());
        }
        if (text_guidance.enabled) {
            UTP_REQUIRE(layout.n_text == 1,
                        "config: text guidance requires a layout with a text token");
            UTP_REQUIRE(!text_guidance.targets.empty(), "config: text guidance has no targets");
            for (Segment s : text_guidance.targets) {
                UTP_REQUIRE(s != Segment::Text, "config: text guidance cannot target text");
            }
        }
        if (layout.n_text == 1) {
            UTP_REQUIRE(text_guidance.dummy_text || io.text_fixture.has_value(),
                        "config: text token needs dummy_text or a text fixture");
        }
        UTP_REQUIRE(!io.out_dir.empty(), "config: io.out_dir must not be empty");
    }

    ForwardOptions forward_options() const {
        ForwardOptions opts;
        opts.bonus_mode = bonus.mode;
        opts.bonus_weight = bonus.weight;
        opts.template_bbox = bonus.bbox;
        opts.text_guided = text_guidance.enabled;
        opts.text_targets = text_guidance.targets;
        return opts;
    }

    /// Known presets: ostrack256, ostrack384, sutrack224, sutrack384, each
    /// also accepted with a "-utp" suffix. All carry the default pruning
    /// schedule of their family; --no-prune clears it.
    static RunConfig preset(std::string_view name) {
        std::string base{name};
        constexpr std::string_view suffix = "-utp";
        if (base.size() > suffix.size() &&
            base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
            base.resize(base.size() - suffix.size());
        }
        RunConfig cfg;
        cfg.layout = SegmentLayout::preset(base);
        cfg.encoder = EncoderConfig::preset(base);
        const bool unified = cfg.layout.n_text == 1;
        if (unified) {
            cfg.schedule.ce_layers = {6, 12, 18};
            cfg.schedule.dte_layers = {9, 15, 21};
            cfg.schedule.ste_layers = {9, 15, 21};
            cfg.schedule.keep_ratio_sr = 0.7;
            cfg.schedule.keep_ratio_dt = 0.6;
            cfg.schedule.keep_ratio_st = 0.6;
            cfg.text_guidance.enabled = true;
        } else {
            cfg.schedule.ce_layers = {3, 6, 9};
            cfg.schedule.dte_layers = {4, 7, 10};
            cfg.schedule.ste_layers = {4, 7, 10};
            cfg.schedule.keep_ratio_sr = 0.7;
            cfg.schedule.keep_ratio_dt = 0.7;
            cfg.schedule.keep_ratio_st = 0.7;
        }
        // Default box: template crops expand the target 2x, so the target
        // covers the centered half of the crop.
        const std::size_t side = cfg.layout.template_side();
        cfg.bonus.mode = BonusMode::Soft;
        cfg.bonus.weight = 1.0;
        cfg.bonus.bbox = BBox{side / 4, side / 4, side / 2, side / 2};
        return cfg;
    }

    ordered_json to_json() const;
    static RunConfig from_json(const ordered_json& j);
    static RunConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

namespace detail {

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    return j.at(key).get<T>();
}

inline std::vector<std::size_t> layer_list(const ordered_json& j, const char* key) {
    std::vector<std::size_t> out;
    if (j.contains(key)) {
        out = j.at(key).get<std::vector<std::size_t>>();
    }
    return out;
}

}  // namespace detail

inline ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["layout"] = {
        {"n_sr", layout.n_sr},
        {"n_st", layout.n_st},
        {"n_dt", layout.n_dt},
        {"n_text", layout.n_text},
        {"sr_grid", {layout.sr_grid.rows, layout.sr_grid.cols}},
        {"tmpl_grid", {layout.tmpl_grid.rows, layout.tmpl_grid.cols}},
        {"patch_size", layout.patch_size},
        {"embed_dim", layout.embed_dim},
    };
    j["encoder"] = {
        {"num_layers", encoder.num_layers},
        {"embed_dim", encoder.embed_dim},
        {"num_heads", encoder.num_heads},
        {"mlp_ratio", encoder.mlp_ratio},
    };
    j["schedule"] = {
        {"ce_layers", schedule.ce_layers},
        {"dte_layers", schedule.dte_layers},
        {"ste_layers", schedule.ste_layers},
        {"keep_ratio_sr", schedule.keep_ratio_sr},
        {"keep_ratio_dt", schedule.keep_ratio_dt},
        {"keep_ratio_st", schedule.keep_ratio_st},
    };
    j["bonus"] = ordered_json{{"mode", to_string(bonus.mode)}, {"weight", bonus.weight}};
    if (bonus.bbox.has_value()) {
        j["bonus"]["bbox"] = {bonus.bbox->x, bonus.bbox->y, bonus.bbox->w, bonus.bbox->h};
    }
    ordered_json targets = ordered_json::array();
    for (Segment s : text_guidance.targets) {
        targets.push_back(to_string(s));
    }
    j["text_guidance"] = {
        {"enabled", text_guidance.enabled},
        {"targets", targets},
        {"dummy_text", text_guidance.dummy_text},
    };
    j["seed"] = seed;
    j["io"] = ordered_json{{"out_dir", io.out_dir}};
    auto put_path = [&](const char* key, const std::optional<std::string>& value) {
        if (value.has_value()) {
            j["io"][key] = *value;
        }
    };
    put_path("sr_fixture", io.sr_fixture);
    put_path("st_fixture", io.st_fixture);
    put_path("dt_fixture", io.dt_fixture);
    put_path("text_fixture", io.text_fixture);
    return j;
}

inline RunConfig RunConfig::from_json(const ordered_json& j) {
    RunConfig cfg;
    UTP_REQUIRE(j.contains("layout"), "config: missing 'layout' group");
    const auto& jl = j.at("layout");
    if (jl.contains("preset")) {
        cfg.layout = SegmentLayout::preset(jl.at("preset").get<std::string>());
        cfg.layout.embed_dim = detail::get_or(jl, "embed_dim", cfg.layout.embed_dim);
    } else {
        cfg.layout.n_sr = jl.at("n_sr").get<std::size_t>();
        cfg.layout.n_st = jl.at("n_st").get<std::size_t>();
        cfg.layout.n_dt = jl.at("n_dt").get<std::size_t>();
        cfg.layout.n_text = detail::get_or<std::size_t>(jl, "n_text", 0);
        const auto sr_grid = jl.at("sr_grid").get<std::vector<std::size_t>>();
        const auto tmpl_grid = jl.at("tmpl_grid").get<std::vector<std::size_t>>();
        UTP_REQUIRE(sr_grid.size() == 2 && tmpl_grid.size() == 2,
                    "config: grids must be [rows, cols]");
        cfg.layout.sr_grid = {sr_grid[0], sr_grid[1]};
        cfg.layout.tmpl_grid = {tmpl_grid[0], tmpl_grid[1]};
        cfg.layout.patch_size = detail::get_or<std::size_t>(jl, "patch_size", 16);
        cfg.layout.embed_dim = jl.at("embed_dim").get<std::size_t>();
    }

    if (j.contains("encoder")) {
        const auto& je = j.at("encoder");
        if (je.contains("preset")) {
            cfg.encoder = EncoderConfig::preset(je.at("preset").get<std::string>());
        }
        cfg.encoder.num_layers = detail::get_or(je, "num_layers", cfg.encoder.num_layers);
        cfg.encoder.embed_dim = detail::get_or(je, "embed_dim", cfg.layout.embed_dim);
        cfg.encoder.num_heads = detail::get_or(je, "num_heads", cfg.encoder.num_heads);
        cfg.encoder.mlp_ratio = detail::get_or(je, "mlp_ratio", cfg.encoder.mlp_ratio);
    } else {
        cfg.encoder.embed_dim = cfg.layout.embed_dim;
    }

    if (j.contains("schedule")) {
        const auto& js = j.at("schedule");
        cfg.schedule.ce_layers = detail::layer_list(js, "ce_layers");
        cfg.schedule.dte_layers = detail::layer_list(js, "dte_layers");
        cfg.schedule.ste_layers = detail::layer_list(js, "ste_layers");
        cfg.schedule.keep_ratio_sr = detail::get_or(js, "keep_ratio_sr", 1.0);
        cfg.schedule.keep_ratio_dt = detail::get_or(js, "keep_ratio_dt", 1.0);
        cfg.schedule.keep_ratio_st = detail::get_or(js, "keep_ratio_st", 1.0);
    }

    if (j.contains("bonus")) {
        const auto& jb = j.at("bonus");
        cfg.bonus.mode = bonus_mode_from_string(detail::get_or<std::string>(jb, "mode", "off"));
        cfg.bonus.weight = detail::get_or(jb, "weight", 1.0);
        if (jb.contains("bbox")) {
            const auto box = jb.at("bbox").get<std::vector<std::size_t>>();
            UTP_REQUIRE(box.size() == 4, "config: bbox must be [x, y, w, h]");
            cfg.bonus.bbox = BBox{box[0], box[1], box[2], box[3]};
        }
    }

    if (j.contains("text_guidance")) {
        const auto& jt = j.at("text_guidance");
        cfg.text_guidance.enabled = detail::get_or(jt, "enabled", false);
        if (jt.contains("targets")) {
            cfg.text_guidance.targets.clear();
            for (const auto& t : jt.at("targets")) {
                cfg.text_guidance.targets.push_back(segment_from_string(t.get<std::string>()));
            }
        }
        cfg.text_guidance.dummy_text = detail::get_or(jt, "dummy_text", true);
    }

    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 0);

    if (j.contains("io")) {
        const auto& ji = j.at("io");
        cfg.io.out_dir = detail::get_or<std::string>(ji, "out_dir", "out");
        auto path = [&](const char* key) -> std::optional<std::string> {
            if (ji.contains(key) && !ji.at(key).is_null()) {
                return ji.at(key).get<std::string>();
            }
            return std::nullopt;
        };
        cfg.io.sr_fixture = path("sr_fixture");
        cfg.io.st_fixture = path("st_fixture");
        cfg.io.dt_fixture = path("dt_fixture");
        cfg.io.text_fixture = path("text_fixture");
    }
    return cfg;
}

inline RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    UTP_REQUIRE(is.good(), "config: cannot open ", path.string());
    ordered_json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(detail::cat("config: ", path.string(), ": ", e.what()));
    }
    return from_json(j);
}

inline void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    UTP_REQUIRE(os.good(), "config: cannot write ", path.string());
    os << to_json().dump(2) << "\n";
}

}  // namespace utp
