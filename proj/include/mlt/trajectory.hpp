#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "mlt/affinity.hpp"
#include "mlt/clustering.hpp"
#include "mlt/geometry.hpp"
#include "mlt/types.hpp"

namespace mlt {

namespace detail {

struct GapMotion {
    std::vector<Vec2> steps;  // mean point displacement per frame step
    bool covered{false};      // every step had at least one contributing track
    double direction_variance{0.0};
};

/// Mean per-step displacement of the cluster's point tracks over frames
/// (from_frame, to_frame], plus the circular variance of the step directions
/// in squared degrees. Zero-length steps carry no direction.
inline GapMotion gap_motion(int from_frame, int to_frame,
                            const std::vector<const TrackGeometry*>& tracks) {
    GapMotion m;
    m.covered = true;
    std::vector<double> angles;
    for (int f = from_frame + 1; f <= to_frame; ++f) {
        Vec2 sum{0.0, 0.0};
        int n = 0;
        for (const TrackGeometry* t : tracks) {
            Vec2 v;
            if (!velocity_at(*t, f, v)) continue;
            sum += v;
            ++n;
            if (v.norm() > 0.0) angles.push_back(deg_from_rad(std::atan2(v.y, v.x)));
        }
        if (n == 0) {
            m.covered = false;
            return m;
        }
        m.steps.push_back(sum * (1.0 / n));
    }
    if (!angles.empty()) {
        double s = 0.0, c = 0.0;
        for (double a : angles) {
            s += std::sin(a * kPi / 180.0);
            c += std::cos(a * kPi / 180.0);
        }
        const double mean = deg_from_rad(std::atan2(s, c));
        double acc = 0.0;
        for (double a : angles) {
            double d = std::fmod(a - mean + 540.0, 360.0) - 180.0;
            acc += d * d;
        }
        m.direction_variance = acc / static_cast<double>(angles.size());
    }
    return m;
}

inline double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace detail

/// Fills the frames strictly between two detected boxes. When the cluster's
/// point tracks cover every step of the gap with consistent direction, the
/// center follows their mean motion, linearly corrected so the accumulated
/// path lands exactly on the next box; otherwise plain linear interpolation.
/// Width and height always interpolate linearly.
inline std::vector<TrajectoryBox> interpolate_gap(const TrajectoryBox& prev,
                                                  const TrajectoryBox& next,
                                                  const std::vector<const TrackGeometry*>& dpts,
                                                  const TrackerConfig& cfg) {
    const int gap = next.frame - prev.frame - 1;
    if (gap < 1) throw std::invalid_argument("interpolate_gap: boxes are adjacent or unordered");
    const auto motion = detail::gap_motion(prev.frame, next.frame, dpts);
    const bool guided =
        motion.covered && motion.direction_variance <= cfg.direction_variance_threshold;

    std::vector<TrajectoryBox> out;
    out.reserve(gap);
    const Vec2 total = next.center - prev.center;
    Vec2 accumulated{0.0, 0.0};
    Vec2 drift{0.0, 0.0};
    if (guided) {
        for (const Vec2& s : motion.steps) drift += s;
        drift = total - drift;  // spread evenly so the path stays anchored
    }
    for (int s = 1; s <= gap; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(gap + 1);
        TrajectoryBox b;
        b.frame = prev.frame + s;
        if (guided) {
            accumulated += motion.steps[s - 1];
            b.center = prev.center + accumulated + drift * t;
        } else {
            b.center = {detail::lerp(prev.center.x, next.center.x, t),
                        detail::lerp(prev.center.y, next.center.y, t)};
        }
        b.width = detail::lerp(prev.width, next.width, t);
        b.height = detail::lerp(prev.height, next.height, t);
        b.provenance = Provenance::interpolated;
        out.push_back(b);
    }
    return out;
}

namespace detail {

/// Extends a trajectory end while point tracks support the motion, up to
/// max_steps frames and never past the batch bound. Direction variance above
/// the config threshold abandons the extension.
inline std::vector<TrajectoryBox> extrapolate_end(const TrajectoryBox& anchor, bool forward,
                                                  int bound_frame, int max_steps,
                                                  const std::vector<const TrackGeometry*>& dpts,
                                                  const TrackerConfig& cfg) {
    std::vector<TrajectoryBox> out;
    if (max_steps <= 0) return out;
    const int dir = forward ? 1 : -1;
    int supported = 0;
    while (supported < max_steps) {
        const int f = anchor.frame + dir * (supported + 1);
        if (forward ? f > bound_frame : f < bound_frame) break;
        const int step_frame = forward ? f : f + 1;  // displacement step (step_frame-1, step_frame]
        bool any = false;
        for (const TrackGeometry* t : dpts) {
            Vec2 v;
            if (velocity_at(*t, step_frame, v)) {
                any = true;
                break;
            }
        }
        if (!any) break;
        ++supported;
    }
    if (supported == 0) return out;
    const int first = forward ? anchor.frame : anchor.frame - supported;
    const int last = forward ? anchor.frame + supported : anchor.frame;
    const auto motion = gap_motion(first, last, dpts);
    if (!motion.covered || motion.direction_variance > cfg.direction_variance_threshold) return out;

    Vec2 center = anchor.center;
    for (int s = 1; s <= supported; ++s) {
        TrajectoryBox b;
        b.frame = anchor.frame + dir * s;
        const Vec2 step = forward ? motion.steps[s - 1] : motion.steps[supported - s];
        center = forward ? center + step : center - step;
        b.center = center;
        b.width = anchor.width;
        b.height = anchor.height;
        b.provenance = Provenance::extrapolated;
        out.push_back(b);
    }
    if (!forward) std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// Turns the selected clustering into per-person trajectories. Clusters
/// without any detection are background and dropped; detection gaps are
/// filled by interpolate_gap; ends are extended a few frames when the
/// cluster's point tracks support it. When a cluster holds two detections at
/// the same frame, the more confident one wins.
inline std::vector<Trajectory> extract(const ClusterAssignment& assignment,
                                       const std::vector<TrackGeometry>& low_geoms,
                                       const std::vector<FeatureTrack>& mid_tracks,
                                       const std::vector<Detection>& detections, int batch_first,
                                       int batch_last, const TrackerConfig& cfg) {
    const int n_low = static_cast<int>(low_geoms.size());
    const int n_total = n_low + static_cast<int>(mid_tracks.size());
    if (static_cast<int>(assignment.labels.size()) != n_total)
        throw std::invalid_argument("extract: assignment does not cover all tracks");

    std::vector<Trajectory> out;
    int next_id = 1;
    for (int c = 0; c < std::max(assignment.k, 1); ++c) {
        // most confident detection per frame in this cluster
        std::map<int, const Detection*> by_frame;
        for (std::size_t t = 0; t < mid_tracks.size(); ++t) {
            if (assignment.labels[n_low + static_cast<int>(t)] != c) continue;
            for (const auto& mbr : mid_tracks[t].members) {
                const Detection& d = detections.at(mbr.feature);
                auto [it, inserted] = by_frame.try_emplace(d.frame, &d);
                if (!inserted && d.confidence > it->second->confidence) it->second = &d;
            }
        }
        if (by_frame.empty()) continue;  // background cluster

        std::vector<const TrackGeometry*> cluster_dpts;
        for (int i = 0; i < n_low; ++i)
            if (assignment.labels[i] == c) cluster_dpts.push_back(&low_geoms[i]);

        Trajectory traj;
        traj.id = next_id++;
        traj.source_cluster = c;
        for (const auto& [frame, det] : by_frame) {
            TrajectoryBox b{frame, det->center, det->width, det->height, Provenance::detected};
            if (!traj.boxes.empty() && b.frame - traj.boxes.back().frame > 1) {
                const TrajectoryBox prev = traj.boxes.back();
                for (auto& ib : interpolate_gap(prev, b, cluster_dpts, cfg)) traj.boxes.push_back(ib);
            }
            traj.boxes.push_back(b);
        }

        const int cap = cfg.f_max / 3;
        const auto head = detail::extrapolate_end(traj.boxes.front(), false, batch_first,
                                                  std::min(cap, traj.boxes.front().frame - batch_first),
                                                  cluster_dpts, cfg);
        const auto tail = detail::extrapolate_end(traj.boxes.back(), true, batch_last,
                                                  std::min(cap, batch_last - traj.boxes.back().frame),
                                                  cluster_dpts, cfg);
        traj.boxes.insert(traj.boxes.begin(), head.begin(), head.end());
        traj.boxes.insert(traj.boxes.end(), tail.begin(), tail.end());
        out.push_back(std::move(traj));
    }
    return out;
}

/// One batch's extraction output together with its frame span.
struct BatchOutput {
    int first_frame{0};
    int last_frame{0};
    std::vector<Trajectory> trajectories;
};

/// Left-fold merge across batch boundaries. At each shared frame, trajectory
/// pairs are matched greedily by descending box IoU (ties: smaller id pair);
/// matches at or above iou_match_threshold continue the left id, everything
/// else starts or ends a trajectory. Final ids are renumbered 1..N.
inline std::vector<Trajectory> stitch_batches(const std::vector<BatchOutput>& batches,
                                              const TrackerConfig& cfg) {
    std::vector<Trajectory> merged;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        if (b == 0) {
            merged = batches[b].trajectories;
            continue;
        }
        if (batches[b].first_frame != batches[b - 1].last_frame)
            throw std::invalid_argument("stitch_batches: batch spans do not overlap");
        const int boundary = batches[b].first_frame;

        auto box_at = [&](const Trajectory& t, int frame) -> const TrajectoryBox* {
            for (const auto& bx : t.boxes)
                if (bx.frame == frame) return &bx;
            return nullptr;
        };
        struct Candidate {
            double overlap;
            int left, right;
        };
        std::vector<Candidate> cands;
        for (std::size_t l = 0; l < merged.size(); ++l) {
            const TrajectoryBox* lb = box_at(merged[l], boundary);
            if (!lb) continue;
            for (std::size_t r = 0; r < batches[b].trajectories.size(); ++r) {
                const TrajectoryBox* rb = box_at(batches[b].trajectories[r], boundary);
                if (!rb) continue;
                const double o = iou(lb->box(), rb->box());
                if (o >= cfg.iou_match_threshold)
                    cands.push_back({o, static_cast<int>(l), static_cast<int>(r)});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            if (a.overlap != b.overlap) return a.overlap > b.overlap;
            if (a.left != b.left) return a.left < b.left;
            return a.right < b.right;
        });
        std::vector<char> left_used(merged.size(), 0), right_used(batches[b].trajectories.size(), 0);
        for (const auto& c : cands) {
            if (left_used[c.left] || right_used[c.right]) continue;
            left_used[c.left] = 1;
            right_used[c.right] = 1;
            for (const auto& bx : batches[b].trajectories[c.right].boxes)
                if (bx.frame > boundary) merged[c.left].boxes.push_back(bx);
        }
        for (std::size_t r = 0; r < batches[b].trajectories.size(); ++r)
            if (!right_used[r]) merged.push_back(batches[b].trajectories[r]);
    }
    int next_id = 1;
    for (auto& t : merged) t.id = next_id++;
    return merged;
}

}  // namespace mlt
