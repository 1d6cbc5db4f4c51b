#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mlt/geometry.hpp"
#include "mlt/parallel.hpp"
#include "mlt/types.hpp"

namespace mlt {

/// Uniform per-track view for the pairwise affinities: a point trajectory
/// plus, for detection tracks, the boxes themselves. Detection tracks use
/// their box centers as the point trajectory.
struct TrackGeometry {
    std::vector<int> frames;  // ascending, unique; gaps allowed across links
    std::vector<Vec2> points;
    std::vector<Box> boxes;  // empty for point tracks

    int index_of(int frame) const {
        const auto it = std::lower_bound(frames.begin(), frames.end(), frame);
        if (it == frames.end() || *it != frame) return -1;
        return static_cast<int>(it - frames.begin());
    }
    bool covers(int frame) const { return index_of(frame) != -1; }
};

inline TrackGeometry geometry_from_low(const FeatureTrack& t,
                                       const std::vector<DptTracklet>& dpts) {
    TrackGeometry g;
    for (const auto& m : t.members) {
        const auto& trk = dpts.at(m.feature);
        for (const auto& p : trk.points) {
            g.frames.push_back(p.frame);
            g.points.push_back(p.pos);
        }
    }
    return g;
}

inline TrackGeometry geometry_from_mid(const FeatureTrack& t,
                                       const std::vector<Detection>& dets) {
    TrackGeometry g;
    for (const auto& m : t.members) {
        const auto& d = dets.at(m.feature);
        g.frames.push_back(d.frame);
        g.points.push_back(d.center);
        g.boxes.push_back(d.box());
    }
    return g;
}

/// Frame-indexed boxes of all detections that survived the linking stage.
class DetectionIndex {
  public:
    DetectionIndex() = default;
    explicit DetectionIndex(const std::vector<TrackGeometry>& mid_tracks) {
        for (const auto& t : mid_tracks)
            for (std::size_t k = 0; k < t.frames.size(); ++k)
                by_frame_[t.frames[k]].push_back(t.boxes.at(k));
    }
    const std::vector<Box>& at_frame(int frame) const {
        const auto it = by_frame_.find(frame);
        return it == by_frame_.end() ? empty_ : it->second;
    }

  private:
    std::map<int, std::vector<Box>> by_frame_;
    std::vector<Box> empty_;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<int> common_frames(const TrackGeometry& a, const TrackGeometry& b) {
    std::vector<int> out;
    std::set_intersection(a.frames.begin(), a.frames.end(), b.frames.begin(), b.frames.end(),
                          std::back_inserter(out));
    return out;
}

inline std::vector<const Box*> containing_boxes(const DetectionIndex& index, int frame,
                                                const Vec2& p) {
    std::vector<const Box*> out;
    for (const auto& b : index.at_frame(frame))
        if (b.contains(p)) out.push_back(&b);
    return out;
}

/// Velocity at frame f (displacement from f-1), when both frames are covered.
inline bool velocity_at(const TrackGeometry& t, int frame, Vec2& v) {
    const int i1 = t.index_of(frame), i0 = t.index_of(frame - 1);
    if (i0 == -1 || i1 == -1) return false;
    v = t.points[i1] - t.points[i0];
    return true;
}

/// One-sided Gaussian falloff ratio N(x; mu, sigma) / N(mu; mu, sigma).
inline double gaussian_ratio(double x, double mu, double sigma) {
    if (x <= mu) return 1.0;
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z);
}

}  // namespace detail

/// Detection-consensus affinity between two point tracks: average over common
/// frames of the maximum IoU between a box containing i's point and a box
/// containing j's point; frames where either point is uncovered contribute
/// the no-information value 0.5.
inline double w_det(const TrackGeometry& i, const TrackGeometry& j, const DetectionIndex& index) {
    const auto frames = detail::common_frames(i, j);
    if (frames.empty()) throw std::invalid_argument("w_det: tracks share no frames");
    double sum = 0.0;
    for (int f : frames) {
        const auto bi = detail::containing_boxes(index, f, i.points[i.index_of(f)]);
        const auto bj = detail::containing_boxes(index, f, j.points[j.index_of(f)]);
        if (bi.empty() || bj.empty()) {
            sum += 0.5;
            continue;
        }
        double best = 0.0;
        for (const Box* a : bi)
            for (const Box* b : bj) best = std::max(best, iou(*a, *b));
        sum += best;
    }
    return sum / static_cast<double>(frames.size());
}

namespace detail {

/// Median extent (height or width) of the boxes a track's points fall into.
/// Returns false when no box ever contains a point of the track.
inline bool median_extent(const TrackGeometry& t, const DetectionIndex& index, bool height,
                          double& out) {
    std::vector<double> ext;
    for (std::size_t k = 0; k < t.frames.size(); ++k)
        for (const Box* b : containing_boxes(index, t.frames[k], t.points[k]))
            ext.push_back(height ? b->height : b->width);
    if (ext.empty()) return false;
    out = median(std::move(ext));
    return true;
}

/// Directed, scale-normalized median offset transformed through the Gaussian
/// falloff. axis_y selects vertical offsets against median height.
inline double directed_distance(const TrackGeometry& i, const TrackGeometry& j,
                                const std::vector<int>& frames, double med_extent, bool axis_y,
                                const TrackerConfig& cfg) {
    std::vector<double> offsets;
    offsets.reserve(frames.size());
    for (int f : frames) {
        const Vec2 pi = i.points[i.index_of(f)], pj = j.points[j.index_of(f)];
        offsets.push_back(std::abs(axis_y ? pi.y - pj.y : pi.x - pj.x) / med_extent);
    }
    return gaussian_ratio(median(std::move(offsets)), cfg.mu_dist, cfg.sigma_dist);
}

}  // namespace detail

/// Scale-aware proximity affinity. Vertical offsets are normalized by the
/// median height of the boxes around each track (horizontal by median width),
/// pushed through the Gaussian falloff in both directions, and averaged per
/// axis. Pairs failing the 0.5 plausibility gate on either axis score 0;
/// tracks that never fall inside any box score the no-information 0.5.
inline double w_dist(const TrackGeometry& i, const TrackGeometry& j, const DetectionIndex& index,
                     const TrackerConfig& cfg) {
    const auto frames = detail::common_frames(i, j);
    if (frames.empty()) throw std::invalid_argument("w_dist: tracks share no frames");
    double hi, hj, wi, wj;
    if (!detail::median_extent(i, index, true, hi) || !detail::median_extent(j, index, true, hj) ||
        !detail::median_extent(i, index, false, wi) || !detail::median_extent(j, index, false, wj))
        return 0.5;
    const double dh = 0.5 * (detail::directed_distance(i, j, frames, hi, true, cfg) +
                             detail::directed_distance(j, i, frames, hj, true, cfg));
    const double dw = 0.5 * (detail::directed_distance(i, j, frames, wi, false, cfg) +
                             detail::directed_distance(j, i, frames, wj, false, cfg));
    if (dh < 0.5 || dw < 0.5) return 0.0;
    return 0.5 * (dh + dw);
}

/// Speed-consistency affinity: median over common frames of the ratio of the
/// slower to the faster per-frame displacement. Two jointly static tracks
/// count as fully consistent.
inline double w_speed(const TrackGeometry& i, const TrackGeometry& j) {
    const auto frames = detail::common_frames(i, j);
    if (frames.size() < 2) return 0.5;
    std::vector<double> ratios;
    for (int f : frames) {
        Vec2 vi, vj;
        if (!detail::velocity_at(i, f, vi) || !detail::velocity_at(j, f, vj)) continue;
        const double si = vi.norm(), sj = vj.norm();
        const double hi = std::max(si, sj);
        ratios.push_back(hi == 0.0 ? 1.0 : std::min(si, sj) / hi);
    }
    if (ratios.empty()) return 0.5;
    return detail::median(std::move(ratios));
}

/// Direction-consistency affinity: Gaussian falloff of the median unsigned
/// angle (degrees) between per-frame velocities; zero-velocity frames are
/// skipped.
inline double w_angle(const TrackGeometry& i, const TrackGeometry& j, const TrackerConfig& cfg) {
    const auto frames = detail::common_frames(i, j);
    if (frames.size() < 2) return 0.5;
    std::vector<double> angles;
    for (int f : frames) {
        Vec2 vi, vj;
        if (!detail::velocity_at(i, f, vi) || !detail::velocity_at(j, f, vj)) continue;
        if (vi.norm() == 0.0 || vj.norm() == 0.0) continue;
        angles.push_back(angle_between_deg(vi, vj));
    }
    if (angles.empty()) return 0.5;
    const double med = detail::median(std::move(angles));
    return std::exp(-(med * med) / (2.0 * cfg.sigma_angle * cfg.sigma_angle));
}

/// Equal-weight blend of speed and angle, mapped linearly into [0.5, 1] so
/// that motion agreement can only ever support, never veto, a pairing.
inline double w_velocity(const TrackGeometry& i, const TrackGeometry& j,
                         const TrackerConfig& cfg) {
    return 0.5 + 0.5 * (0.5 * (w_speed(i, j) + w_angle(i, j, cfg)));
}

/// Point-track to point-track affinity. Overlapping tracks blend motion with
/// spatial consensus; temporally disjoint tracks are scored 1 when a single
/// detection track contains a point of each (a bridge), else 0.
inline double w_pp(const TrackGeometry& i, const TrackGeometry& j, const DetectionIndex& index,
                   const std::vector<TrackGeometry>& mid_tracks, const TrackerConfig& cfg) {
    if (!detail::common_frames(i, j).empty())
        return w_velocity(i, j, cfg) * 0.5 * (w_dist(i, j, index, cfg) + w_det(i, j, index));
    auto touches = [](const TrackGeometry& d, const TrackGeometry& p) {
        for (std::size_t k = 0; k < d.frames.size(); ++k) {
            const int idx = p.index_of(d.frames[k]);
            if (idx != -1 && d.boxes[k].contains(p.points[idx])) return true;
        }
        return false;
    };
    for (const auto& d : mid_tracks)
        if (touches(d, i) && touches(d, j)) return 1.0;
    return 0.0;
}

/// Point-track to detection-track affinity: average of the containment
/// fraction over common frames and a motion/consensus term computed on the
/// detection track's center trajectory. No common frames → both halves 0.5.
inline double w_pd(const TrackGeometry& p, const TrackGeometry& d, const DetectionIndex& index,
                   const TrackerConfig& cfg) {
    const auto frames = detail::common_frames(p, d);
    if (frames.empty()) return 0.5;
    int inside = 0;
    for (int f : frames)
        if (d.boxes[d.index_of(f)].contains(p.points[p.index_of(f)])) ++inside;
    const double intersect = static_cast<double>(inside) / static_cast<double>(frames.size());
    const double link = w_velocity(p, d, cfg) * 0.5 * (w_dist(p, d, index, cfg) + w_det(p, d, index));
    return 0.5 * (intersect + link);
}

/// Point-track indices whose point at `frame` falls inside `box`.
inline std::vector<int> intersecting_low_tracks(const std::vector<TrackGeometry>& low_tracks,
                                                int frame, const Box& box) {
    std::vector<int> out;
    for (std::size_t i = 0; i < low_tracks.size(); ++i) {
        const int idx = low_tracks[i].index_of(frame);
        if (idx != -1 && box.contains(low_tracks[i].points[idx])) out.push_back(static_cast<int>(i));
    }
    return out;
}

/// Shared-evidence consistency of two detections: the symmetrized overlap
/// fraction of the point tracks each detection contains. When either
/// detection contains no point track there is no evidence either way: 0.5.
inline double w_dd_t(const std::vector<int>& tracks_a, const std::vector<int>& tracks_b) {
    if (tracks_a.empty() || tracks_b.empty()) return 0.5;
    std::vector<int> inter;
    std::set_intersection(tracks_a.begin(), tracks_a.end(), tracks_b.begin(), tracks_b.end(),
                          std::back_inserter(inter));
    const double r_ab = static_cast<double>(inter.size()) / static_cast<double>(tracks_a.size());
    const double r_ba = static_cast<double>(inter.size()) / static_cast<double>(tracks_b.size());
    return 0.5 * (r_ab + r_ba);
}

/// Detection-level affinity: shared point-track evidence, masked by whether
/// the two detections were linked into the same track.
inline double w_dd_detections(const Box& box_a, int frame_a, const Box& box_b, int frame_b,
                              bool same_track, const std::vector<TrackGeometry>& low_tracks) {
    if (!same_track) return 0.0;
    return w_dd_t(intersecting_low_tracks(low_tracks, frame_a, box_a),
                  intersecting_low_tracks(low_tracks, frame_b, box_b));
}

/// Track-level lift of the detection affinity, evaluated on the representative
/// detections at the two tracks' temporally closest frames (ties: earliest
/// pair, which keeps the choice symmetric in the two arguments).
inline double w_dd(const TrackGeometry& a, const TrackGeometry& b, bool same_track,
                   const std::vector<TrackGeometry>& low_tracks) {
    if (a.frames.empty() || b.frames.empty())
        throw std::invalid_argument("w_dd: empty detection track");
    int best_ia = 0, best_ib = 0, best_gap = -1, best_sum = 0;
    for (std::size_t ia = 0; ia < a.frames.size(); ++ia)
        for (std::size_t ib = 0; ib < b.frames.size(); ++ib) {
            const int gap = std::abs(a.frames[ia] - b.frames[ib]);
            const int sum = a.frames[ia] + b.frames[ib];
            if (best_gap == -1 || gap < best_gap || (gap == best_gap && sum < best_sum)) {
                best_gap = gap;
                best_sum = sum;
                best_ia = static_cast<int>(ia);
                best_ib = static_cast<int>(ib);
            }
        }
    return w_dd_detections(a.boxes[best_ia], a.frames[best_ia], b.boxes[best_ib],
                           b.frames[best_ib], same_track, low_tracks);
}

/// Pairwise affinities over all feature tracks: point tracks first, then
/// detection tracks. Symmetric, unit diagonal, near-zero entries snapped to 0
/// (the 0.5 no-information value is exempt).
struct AffinityMatrix {
    Eigen::MatrixXd W;
    int n_low{0};

    int size() const { return static_cast<int>(W.rows()); }
    int n_mid() const { return size() - n_low; }
};

/// Signed clustering costs: Q = -2W + 1. Affinity above 0.5 rewards
/// co-clustering (negative cost), below 0.5 penalizes it.
struct CostMatrix {
    Eigen::MatrixXd Q;
    int n_low{0};
};

inline AffinityMatrix assemble(const std::vector<TrackGeometry>& low_tracks,
                               const std::vector<TrackGeometry>& mid_tracks,
                               const DetectionIndex& index, const TrackerConfig& cfg,
                               int threads = 0) {
    const int n_low = static_cast<int>(low_tracks.size());
    const int f = n_low + static_cast<int>(mid_tracks.size());
    AffinityMatrix m;
    m.n_low = n_low;
    m.W = Eigen::MatrixXd::Zero(f, f);

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < f; ++i)
        for (int j = i + 1; j < f; ++j) pairs.emplace_back(i, j);

    auto& W = m.W;
    parallel_for(pairs.size(), threads, [&](std::size_t idx) {
        const auto [i, j] = pairs[idx];
        double w = 0.0;
        if (j < n_low) {
            w = w_pp(low_tracks[i], low_tracks[j], index, mid_tracks, cfg);
        } else if (i < n_low) {
            w = w_pd(low_tracks[i], mid_tracks[j - n_low], index, cfg);
        } else {
            w = w_dd(mid_tracks[i - n_low], mid_tracks[j - n_low], i == j, low_tracks);
        }
        if (w < cfg.affinity_floor && w != 0.5) w = 0.0;
        W(i, j) = w;
        W(j, i) = w;
    });
    for (int i = 0; i < f; ++i) W(i, i) = 1.0;
    return m;
}

inline CostMatrix to_cost(const AffinityMatrix& w) {
    CostMatrix q;
    q.n_low = w.n_low;
    q.Q = -2.0 * w.W.array() + 1.0;
    return q;
}

}  // namespace mlt
