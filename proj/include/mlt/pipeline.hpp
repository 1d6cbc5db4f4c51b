#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mlt/affinity.hpp"
#include "mlt/clustering.hpp"
#include "mlt/flow.hpp"
#include "mlt/io.hpp"
#include "mlt/trajectory.hpp"
#include "mlt/types.hpp"

namespace mlt {

struct BatchDiagnostics {
    int first_frame{0};
    int last_frame{0};
    int raw_low{0};   // clipped tracklets entering the prefilter
    int kept_low{0};  // tracklets that survived it
    int n_detections{0};
    int low_tracks{0};
    int mid_tracks{0};
    int k{0};
    double objective{0.0};
    double ms_linking{0.0};
    double ms_affinity{0.0};
    double ms_clustering{0.0};
    double ms_extract{0.0};
};

struct PipelineResult {
    std::vector<Trajectory> trajectories;
    std::vector<BatchDiagnostics> batches;
    std::vector<KSweepEntry> sweep_grid;  // proposal grid of the first populated batch
    int selected_k{0};                    // cluster count chosen there
};

namespace detail {

inline int sequence_end(const SequenceBundle& bundle) {
    int end = bundle.frame_count;
    for (const auto& d : bundle.detections) end = std::max(end, d.frame);
    for (const auto& t : bundle.dpts) end = std::max(end, t.last_frame());
    return end;
}

/// Consecutive spans covering [1, end] that share their boundary frames, so
/// each pair of neighbours overlaps in exactly one frame.
inline std::vector<std::pair<int, int>> batch_spans(int end, int batch_len) {
    std::vector<std::pair<int, int>> spans;
    if (end < 1) return spans;
    int s = 1;
    while (true) {
        const int e = std::min(s + batch_len - 1, end);
        spans.emplace_back(s, e);
        if (e >= end) break;
        s = e;
    }
    return spans;
}

inline DptTracklet clip_tracklet(const DptTracklet& t, int first, int last) {
    DptTracklet out;
    out.id = t.id;
    for (const auto& p : t.points)
        if (p.frame >= first && p.frame <= last) out.points.push_back(p);
    return out;
}

/// Tracklets worth feeding into the linking stage: they have to move, and
/// they have to touch a detection box at some shared frame. Everything else
/// is background texture.
inline bool worth_keeping(const DptTracklet& t, const std::map<int, std::vector<Box>>& det_boxes,
                          const TrackerConfig& cfg) {
    if ((t.points.back().pos - t.points.front().pos).norm() < cfg.static_dpt_threshold)
        return false;
    for (const auto& p : t.points) {
        const auto it = det_boxes.find(p.frame);
        if (it == det_boxes.end()) continue;
        for (const auto& b : it->second)
            if (b.contains(p.pos)) return true;
    }
    return false;
}

inline LinkFeature feature_from_tracklet(const DptTracklet& t) {
    LinkFeature f;
    f.first_frame = t.first_frame();
    f.last_frame = t.last_frame();
    f.first_pos = t.points.front().pos;
    f.last_pos = t.points.back().pos;
    f.first_color = t.points.front().color;
    f.last_color = t.points.back().color;
    return f;
}

inline LinkFeature feature_from_detection(const Detection& d) {
    LinkFeature f;
    f.first_frame = d.frame;
    f.last_frame = d.frame;
    f.first_pos = d.center;
    f.last_pos = d.center;
    f.confidence = d.confidence;
    return f;
}

inline std::vector<FeatureTrack> tracks_from_chains(const FlowResult& flow, Category cat,
                                                    const std::vector<LinkFeature>& features) {
    std::vector<FeatureTrack> tracks;
    for (const auto& chain : flow.chains) {
        FeatureTrack t;
        t.category = cat;
        t.id = static_cast<int>(tracks.size()) + 1;
        for (int idx : chain)
            t.members.push_back({idx, features.at(idx).first_frame, features.at(idx).last_frame});
        tracks.push_back(std::move(t));
    }
    return tracks;
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline PipelineResult run_impl(const SequenceBundle& bundle, const TrackerConfig& cfg, int threads,
                               int forced_k) {
    PipelineResult result;
    const int end = sequence_end(bundle);
    const auto spans = batch_spans(end, cfg.batch_len);

    double conf_min = 0.0, conf_max = 0.0;
    if (!bundle.detections.empty()) {
        conf_min = conf_max = bundle.detections.front().confidence;
        for (const auto& d : bundle.detections) {
            conf_min = std::min(conf_min, d.confidence);
            conf_max = std::max(conf_max, d.confidence);
        }
    }

    std::vector<BatchOutput> outputs;
    bool grid_taken = false;
    for (std::size_t b = 0; b < spans.size(); ++b) {
        const auto [s, e] = spans[b];
        BatchDiagnostics diag;
        diag.first_frame = s;
        diag.last_frame = e;

        // Boundary frames belong to the earlier batch; tracklets may span them.
        std::vector<Detection> dets;
        for (const auto& d : bundle.detections)
            if (d.frame <= e && (b == 0 ? d.frame >= s : d.frame > s)) dets.push_back(d);
        diag.n_detections = static_cast<int>(dets.size());

        std::map<int, std::vector<Box>> det_boxes;
        for (const auto& d : dets) det_boxes[d.frame].push_back(d.box());

        std::vector<DptTracklet> dpts;
        for (const auto& t : bundle.dpts) {
            DptTracklet clipped = clip_tracklet(t, s, e);
            if (clipped.points.size() < 2) continue;
            ++diag.raw_low;
            if (worth_keeping(clipped, det_boxes, cfg)) dpts.push_back(std::move(clipped));
        }
        diag.kept_low = static_cast<int>(dpts.size());

        auto t0 = std::chrono::steady_clock::now();
        std::vector<LinkFeature> low_features;
        for (const auto& t : dpts) low_features.push_back(feature_from_tracklet(t));
        FlowResult low_flow;
        if (!low_features.empty())
            low_flow = solve_linking(build_graph(
                low_features, std::vector<double>(low_features.size(), 0.0), Category::low, cfg));

        std::vector<LinkFeature> mid_features;
        std::vector<double> mid_costs;
        for (const auto& d : dets) {
            mid_features.push_back(feature_from_detection(d));
            mid_costs.push_back(detection_cost(d.confidence, conf_min, conf_max,
                                               cfg.confidence_epsilon));
        }
        FlowResult mid_flow;
        if (!mid_features.empty())
            mid_flow = solve_linking(build_graph(mid_features, mid_costs, Category::mid, cfg));
        diag.ms_linking = ms_since(t0);

        const auto low_tracks = tracks_from_chains(low_flow, Category::low, low_features);
        const auto mid_tracks = tracks_from_chains(mid_flow, Category::mid, mid_features);
        diag.low_tracks = static_cast<int>(low_tracks.size());
        diag.mid_tracks = static_cast<int>(mid_tracks.size());

        std::vector<TrackGeometry> low_geoms, mid_geoms;
        for (const auto& t : low_tracks) low_geoms.push_back(geometry_from_low(t, dpts));
        for (const auto& t : mid_tracks) mid_geoms.push_back(geometry_from_mid(t, dets));

        BatchOutput out;
        out.first_frame = s;
        out.last_frame = e;
        if (!low_geoms.empty() || !mid_geoms.empty()) {
            t0 = std::chrono::steady_clock::now();
            const DetectionIndex index(mid_geoms);
            const AffinityMatrix w = assemble(low_geoms, mid_geoms, index, cfg, threads);
            const CostMatrix q = to_cost(w);
            diag.ms_affinity = ms_since(t0);

            t0 = std::chrono::steady_clock::now();
            std::vector<KSweepEntry>* grid = grid_taken ? nullptr : &result.sweep_grid;
            const ClusterAssignment assignment =
                forced_k > 0 ? select_clustering_at(w, q, forced_k, cfg, threads)
                             : select_clustering(w, q, cfg, threads, grid);
            if (!grid_taken) {
                result.selected_k = assignment.k;
                grid_taken = true;
            }
            diag.k = assignment.k;
            diag.objective = assignment.objective;
            diag.ms_clustering = ms_since(t0);

            t0 = std::chrono::steady_clock::now();
            out.trajectories = extract(assignment, low_geoms, mid_tracks, dets, s, e, cfg);
            diag.ms_extract = ms_since(t0);
        }
        outputs.push_back(std::move(out));
        result.batches.push_back(diag);
    }

    result.trajectories = stitch_batches(outputs, cfg);
    return result;
}

}  // namespace detail

/// Full tracker: batch the sequence, link both feature categories, couple
/// them through the affinity matrix, cluster, extract and stitch.
inline PipelineResult run(const SequenceBundle& bundle, const TrackerConfig& cfg,
                          int threads = 0) {
    return detail::run_impl(bundle, cfg, threads, 0);
}

/// Same pipeline with the cluster count pinned instead of swept. Throws when
/// some populated batch has fewer tracks than k.
inline PipelineResult run_forced_k(const SequenceBundle& bundle, const TrackerConfig& cfg, int k,
                                   int threads = 0) {
    if (k < 1) throw std::invalid_argument("run_forced_k: k must be positive");
    return detail::run_impl(bundle, cfg, threads, k);
}

/// Detection-only baseline: one linking pass over the whole sequence, each
/// chain reported as-is. No point tracklets, no interpolation, no batching.
inline PipelineResult run_lp2d(const SequenceBundle& bundle, const TrackerConfig& cfg) {
    PipelineResult result;
    if (bundle.detections.empty()) return result;

    double conf_min = bundle.detections.front().confidence, conf_max = conf_min;
    for (const auto& d : bundle.detections) {
        conf_min = std::min(conf_min, d.confidence);
        conf_max = std::max(conf_max, d.confidence);
    }
    std::vector<LinkFeature> features;
    std::vector<double> costs;
    for (const auto& d : bundle.detections) {
        features.push_back(detail::feature_from_detection(d));
        costs.push_back(detection_cost(d.confidence, conf_min, conf_max, cfg.confidence_epsilon));
    }
    const FlowResult flow = solve_linking(build_graph(features, costs, Category::mid, cfg));
    for (const auto& chain : flow.chains) {
        Trajectory traj;
        traj.id = static_cast<int>(result.trajectories.size()) + 1;
        for (int idx : chain) {
            const Detection& d = bundle.detections.at(idx);
            traj.boxes.push_back({d.frame, d.center, d.width, d.height, Provenance::detected});
        }
        result.trajectories.push_back(std::move(traj));
    }
    return result;
}

inline nlohmann::json diagnostics_json(const PipelineResult& r) {
    nlohmann::json j;
    j["selected_k"] = r.selected_k;
    j["n_trajectories"] = r.trajectories.size();
    j["batches"] = nlohmann::json::array();
    for (const auto& b : r.batches) {
        j["batches"].push_back({{"first_frame", b.first_frame},
                                {"last_frame", b.last_frame},
                                {"raw_low", b.raw_low},
                                {"kept_low", b.kept_low},
                                {"detections", b.n_detections},
                                {"low_tracks", b.low_tracks},
                                {"mid_tracks", b.mid_tracks},
                                {"k", b.k},
                                {"objective", b.objective},
                                {"ms_linking", b.ms_linking},
                                {"ms_affinity", b.ms_affinity},
                                {"ms_clustering", b.ms_clustering},
                                {"ms_extract", b.ms_extract}});
    }
    return j;
}

}  // namespace mlt
