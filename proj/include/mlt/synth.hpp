#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlt/geometry.hpp"
#include "mlt/io.hpp"
#include "mlt/rng.hpp"
#include "mlt/types.hpp"

namespace mlt {

struct TargetSpec {
    int entry_frame{1};
    int exit_frame{2};             // inclusive; must exceed entry_frame
    std::vector<Vec2> waypoints;   // piecewise-linear center path over [entry, exit]
    double box_width{30.0};
    double box_height{60.0};
    Color3 base_color;
};

struct OcclusionWindow {
    int target{0};
    int first_frame{0};
    int last_frame{0};  // inclusive; detections suppressed, points continue
};

struct ScenarioSpec {
    std::vector<TargetSpec> targets;
    double detection_dropout{0.0};
    double detection_noise{0.0};     // pixels std on detection centers
    double false_positive_rate{0.0}; // probability of one clutter box per frame
    int dpts_per_target{8};
    int dpt_lifetime{12};            // mean tracklet length in frames
    double dpt_noise{0.5};           // pixels std on point positions
    std::vector<OcclusionWindow> occlusion_windows;
    std::uint64_t seed{42};
    int canvas_width{640};
    int canvas_height{480};
};

struct SynthResult {
    SequenceBundle bundle;
    std::vector<Trajectory> ground_truth;
};

namespace detail {

inline void validate(const ScenarioSpec& s) {
    for (const auto& t : s.targets) {
        if (t.exit_frame <= t.entry_frame)
            throw std::invalid_argument("scenario: target exit_frame must exceed entry_frame");
        if (t.waypoints.empty()) throw std::invalid_argument("scenario: target needs waypoints");
        if (t.box_width <= 0.0 || t.box_height <= 0.0)
            throw std::invalid_argument("scenario: nonpositive box size");
    }
    for (double p : {s.detection_dropout, s.false_positive_rate})
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("scenario: probability outside [0,1]");
    if (s.dpts_per_target < 0 || s.dpt_lifetime < 2)
        throw std::invalid_argument("scenario: dpt parameters out of range");
    for (const auto& w : s.occlusion_windows)
        if (w.target < 0 || w.target >= static_cast<int>(s.targets.size()))
            throw std::invalid_argument("scenario: occlusion window names a missing target");
}

inline Vec2 path_center(const TargetSpec& t, int frame) {
    if (t.waypoints.size() == 1) return t.waypoints.front();
    const double span = t.exit_frame - t.entry_frame;
    double u = (frame - t.entry_frame) / span * (t.waypoints.size() - 1);
    u = std::clamp(u, 0.0, static_cast<double>(t.waypoints.size() - 1));
    const int seg = std::min(static_cast<int>(u), static_cast<int>(t.waypoints.size()) - 2);
    const double local = u - seg;
    const Vec2 a = t.waypoints[seg], b = t.waypoints[seg + 1];
    return {a.x + (b.x - a.x) * local, a.y + (b.y - a.y) * local};
}

inline bool occluded(const ScenarioSpec& s, int target, int frame) {
    for (const auto& w : s.occlusion_windows)
        if (w.target == target && frame >= w.first_frame && frame <= w.last_frame) return true;
    return false;
}

}  // namespace detail

inline int scenario_frame_count(const ScenarioSpec& s) {
    int last = 0;
    for (const auto& t : s.targets) last = std::max(last, t.exit_frame);
    return last;
}

/// Renders the scenario: ground-truth boxes along each path, noisy detections
/// outside dropout/occlusion windows, clutter boxes, and short-lived point
/// tracklets riding the targets that respawn at the same body offset when
/// they expire. One RNG stream in a fixed draw order makes the output a pure
/// function of the scenario.
inline SynthResult generate(const ScenarioSpec& s) {
    detail::validate(s);
    SynthResult out;
    Rng rng(s.seed);
    const int frames = scenario_frame_count(s);
    out.bundle.frame_count = frames;
    out.bundle.image_width = s.canvas_width;
    out.bundle.image_height = s.canvas_height;

    for (std::size_t t = 0; t < s.targets.size(); ++t) {
        const auto& spec = s.targets[t];
        Trajectory traj;
        traj.id = static_cast<int>(t) + 1;
        traj.source_cluster = -1;
        for (int f = spec.entry_frame; f <= spec.exit_frame; ++f)
            traj.boxes.push_back({f, detail::path_center(spec, f), spec.box_width,
                                  spec.box_height, Provenance::detected});
        out.ground_truth.push_back(std::move(traj));
    }

    for (int f = 1; f <= frames; ++f) {
        for (std::size_t t = 0; t < s.targets.size(); ++t) {
            const auto& spec = s.targets[t];
            if (f < spec.entry_frame || f > spec.exit_frame) continue;
            if (detail::occluded(s, static_cast<int>(t), f)) continue;
            if (s.detection_dropout > 0.0 && rng.uniform01() < s.detection_dropout) continue;
            Detection d;
            d.frame = f;
            d.center = detail::path_center(spec, f);
            if (s.detection_noise > 0.0)
                d.center += Vec2{rng.normal(0.0, s.detection_noise),
                                 rng.normal(0.0, s.detection_noise)};
            d.width = spec.box_width;
            d.height = spec.box_height;
            // top-heavy detector scores: mostly confident, a tail of hard cases
            const bool weak = rng.uniform01() < 0.1;
            d.confidence = weak ? 0.4 + 0.3 * rng.uniform01() : 0.9 + 0.1 * rng.uniform01();
            out.bundle.detections.push_back(d);
        }
        if (s.false_positive_rate > 0.0 && rng.uniform01() < s.false_positive_rate) {
            Detection d;
            d.frame = f;
            d.center = {rng.uniform(40.0, s.canvas_width - 40.0),
                        rng.uniform(60.0, s.canvas_height - 60.0)};
            d.width = 30.0;
            d.height = 60.0;
            d.confidence = 0.3 + 0.2 * rng.uniform01();
            out.bundle.detections.push_back(d);
        }
    }

    int next_dpt_id = 1;
    for (std::size_t t = 0; t < s.targets.size(); ++t) {
        const auto& spec = s.targets[t];
        for (int slot = 0; slot < s.dpts_per_target; ++slot) {
            const Vec2 offset{rng.uniform(-0.45 * spec.box_width, 0.45 * spec.box_width),
                              rng.uniform(-0.45 * spec.box_height, 0.45 * spec.box_height)};
            Color3 color{std::clamp(std::round(spec.base_color.r + rng.uniform(-10.0, 10.0)), 0.0, 255.0),
                         std::clamp(std::round(spec.base_color.g + rng.uniform(-10.0, 10.0)), 0.0, 255.0),
                         std::clamp(std::round(spec.base_color.b + rng.uniform(-10.0, 10.0)), 0.0, 255.0)};
            int start = spec.entry_frame;
            while (spec.exit_frame - start + 1 >= 2) {
                const int drawn = static_cast<int>(
                    std::llround(rng.normal(s.dpt_lifetime, s.dpt_lifetime / 3.0)));
                const int len = std::min(std::max(2, drawn), spec.exit_frame - start + 1);
                DptTracklet trk;
                trk.id = next_dpt_id++;
                for (int f = start; f < start + len; ++f) {
                    Vec2 noise{0.0, 0.0};
                    if (s.dpt_noise > 0.0) {
                        const double cap = 3.0 * s.dpt_noise;
                        noise = {std::clamp(rng.normal(0.0, s.dpt_noise), -cap, cap),
                                 std::clamp(rng.normal(0.0, s.dpt_noise), -cap, cap)};
                    }
                    trk.points.push_back({f, detail::path_center(spec, f) + offset + noise, color});
                }
                out.bundle.dpts.push_back(std::move(trk));
                start += len;  // respawn at the same offset on the next frame
            }
        }
    }
    return out;
}

/// Fixed scene definitions used across tests and the command line. All run
/// 50 frames at 640x480 with 30x60 boxes.
inline ScenarioSpec preset(const std::string& name) {
    auto target = [](Vec2 from, Vec2 to, Color3 color) {
        TargetSpec t;
        t.entry_frame = 1;
        t.exit_frame = 50;
        t.waypoints = {from, to};
        t.base_color = color;
        return t;
    };
    ScenarioSpec s;
    if (name == "parallel") {
        // two targets, identical velocity, vertically separated
        s.targets = {target({60, 150}, {560, 150}, {200, 60, 60}),
                     target({60, 290}, {560, 290}, {60, 60, 200})};
        s.detection_dropout = 0.02;
        s.detection_noise = 1.0;
        s.false_positive_rate = 0.02;
    } else if (name == "occlusion") {
        // the first target loses its detections for 8 frames mid-sequence
        s.targets = {target({60, 150}, {560, 150}, {200, 60, 60}),
                     target({560, 330}, {60, 330}, {60, 60, 200})};
        s.detection_noise = 1.0;
        s.occlusion_windows = {{0, 21, 28}};
    } else if (name == "crossing") {
        // X-shaped paths meeting exactly once, at frame 26; the second target
        // loses its detections for a stretch before the crossing
        s.targets = {target({60, 150}, {550, 346}, {200, 60, 60}),
                     target({60, 350}, {550, 154}, {60, 60, 200})};
        s.detection_noise = 1.0;
        s.occlusion_windows = {{1, 14, 20}};
    } else if (name == "crowd4") {
        s.targets = {target({60, 120}, {560, 120}, {200, 60, 60}),
                     target({560, 200}, {60, 200}, {60, 180, 60}),
                     target({80, 340}, {520, 360}, {60, 60, 200}),
                     target({540, 430}, {100, 410}, {220, 180, 40})};
        s.detection_dropout = 0.05;
        s.detection_noise = 1.0;
        s.false_positive_rate = 0.02;
        s.occlusion_windows = {{1, 22, 27}};
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return s;
}

inline nlohmann::json spec_to_json(const ScenarioSpec& s) {
    nlohmann::json j;
    j["targets"] = nlohmann::json::array();
    for (const auto& t : s.targets) {
        nlohmann::json jt;
        jt["entry_frame"] = t.entry_frame;
        jt["exit_frame"] = t.exit_frame;
        jt["waypoints"] = nlohmann::json::array();
        for (const auto& w : t.waypoints) jt["waypoints"].push_back({w.x, w.y});
        jt["box_width"] = t.box_width;
        jt["box_height"] = t.box_height;
        jt["color"] = {t.base_color.r, t.base_color.g, t.base_color.b};
        j["targets"].push_back(jt);
    }
    j["detection_dropout"] = s.detection_dropout;
    j["detection_noise"] = s.detection_noise;
    j["false_positive_rate"] = s.false_positive_rate;
    j["dpts_per_target"] = s.dpts_per_target;
    j["dpt_lifetime"] = s.dpt_lifetime;
    j["dpt_noise"] = s.dpt_noise;
    j["occlusion_windows"] = nlohmann::json::array();
    for (const auto& w : s.occlusion_windows)
        j["occlusion_windows"].push_back({{"target", w.target},
                                          {"first_frame", w.first_frame},
                                          {"last_frame", w.last_frame}});
    j["seed"] = s.seed;
    j["canvas_width"] = s.canvas_width;
    j["canvas_height"] = s.canvas_height;
    return j;
}

inline ScenarioSpec spec_from_json(const nlohmann::json& j) {
    ScenarioSpec s;
    try {
        for (const auto& jt : j.at("targets")) {
            TargetSpec t;
            t.entry_frame = jt.at("entry_frame").get<int>();
            t.exit_frame = jt.at("exit_frame").get<int>();
            for (const auto& w : jt.at("waypoints"))
                t.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
            t.box_width = jt.at("box_width").get<double>();
            t.box_height = jt.at("box_height").get<double>();
            const auto& c = jt.at("color");
            t.base_color = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
            s.targets.push_back(std::move(t));
        }
        s.detection_dropout = j.value("detection_dropout", 0.0);
        s.detection_noise = j.value("detection_noise", 0.0);
        s.false_positive_rate = j.value("false_positive_rate", 0.0);
        s.dpts_per_target = j.value("dpts_per_target", 8);
        s.dpt_lifetime = j.value("dpt_lifetime", 12);
        s.dpt_noise = j.value("dpt_noise", 0.5);
        if (j.contains("occlusion_windows"))
            for (const auto& jw : j.at("occlusion_windows"))
                s.occlusion_windows.push_back({jw.at("target").get<int>(),
                                               jw.at("first_frame").get<int>(),
                                               jw.at("last_frame").get<int>()});
        s.seed = j.value("seed", std::uint64_t{42});
        s.canvas_width = j.value("canvas_width", 640);
        s.canvas_height = j.value("canvas_height", 480);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("scenario: invalid JSON: ") + e.what());
    }
    detail::validate(s);
    return s;
}

}  // namespace mlt
