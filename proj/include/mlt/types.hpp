#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlt/geometry.hpp"

namespace mlt {

/// Feature categories. Dense point tracklets are the low-level features,
/// detector boxes the mid-level ones.
enum class Category { low, mid };

inline const char* to_string(Category c) { return c == Category::low ? "low" : "mid"; }

/// A detector response: box center, extent and raw score at one frame.
struct Detection {
    int frame{0};
    Vec2 center;
    double width{0.0};
    double height{0.0};
    double confidence{0.0};

    Box box() const { return Box{center, width, height}; }
};

/// One sample of a dense point tracklet: position and mean patch color.
struct DptPoint {
    int frame{0};
    Vec2 pos;
    Color3 color;
};

/// A dense point tracklet: consecutive per-frame samples, length >= 2.
struct DptTracklet {
    int id{0};
    std::vector<DptPoint> points;

    int first_frame() const { return points.front().frame; }
    int last_frame() const { return points.back().frame; }

    /// Position at an absolute frame; frames are consecutive so this is an index lookup.
    const DptPoint& at_frame(int frame) const {
        return points.at(static_cast<std::size_t>(frame - first_frame()));
    }
    bool covers(int frame) const { return frame >= first_frame() && frame <= last_frame(); }
};

/// One member of a feature track: a feature index plus the frame span it occupies.
/// Detections occupy a single frame, tracklets a consecutive range.
struct TrackMember {
    int feature{0};
    int first_frame{0};
    int last_frame{0};
};

/// Temporally linked features of one category. Members are sorted in time and
/// never overlap, so the track has at most one feature per frame.
struct FeatureTrack {
    Category category{Category::mid};
    int id{0};
    std::vector<TrackMember> members;

    bool empty() const { return members.empty(); }
};

/// First and last frame occupied by a track. Track must be nonempty.
inline std::pair<int, int> track_frame_span(const FeatureTrack& track) {
    if (track.members.empty()) throw std::invalid_argument("track_frame_span: empty track");
    return {track.members.front().first_frame, track.members.back().last_frame};
}

/// All frames covered by the track's members, ascending.
inline std::vector<int> covered_frames(const FeatureTrack& track) {
    std::vector<int> out;
    for (const auto& m : track.members)
        for (int f = m.first_frame; f <= m.last_frame; ++f) out.push_back(f);
    return out;
}

/// Frames at which both tracks have a member. Symmetric; disjoint tracks
/// yield the empty set.
inline std::vector<int> common_frames(const FeatureTrack& a, const FeatureTrack& b) {
    const std::vector<int> fa = covered_frames(a);
    const std::vector<int> fb = covered_frames(b);
    std::vector<int> out;
    std::set_intersection(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(out));
    return out;
}

/// How a trajectory box was obtained.
enum class Provenance { detected, interpolated, extrapolated };

struct TrajectoryBox {
    int frame{0};
    Vec2 center;
    double width{0.0};
    double height{0.0};
    Provenance provenance{Provenance::detected};

    Box box() const { return Box{center, width, height}; }
};

/// Final per-person output: per-frame boxes with provenance flags.
/// Frames are strictly increasing and at least one box is detected.
struct Trajectory {
    int id{0};
    std::vector<TrajectoryBox> boxes;
    int source_cluster{-1};
};

/// All tracker parameters. Defaults follow the reference configuration;
/// see read_config() for the JSON schema.
struct TrackerConfig {
    double v_max{25.0};                         // max speed, pixels per frame
    double a_max{20.0};                         // max appearance distance
    int f_max{15};                              // max temporal gap, frames
    double sigma_dist{0.4};
    double mu_dist{0.05};
    double sigma_angle{50.0};                   // degrees
    int batch_len{50};                          // frames per batch
    int ncut_runs{50};                          // clustering proposals per k
    int k_sweep_halfwidth{5};
    double affinity_floor{0.05};
    double c_in{10.0};
    double c_out{10.0};
    double confidence_epsilon{0.05};
    double static_dpt_threshold{2.0};           // pixels
    double direction_variance_threshold{400.0}; // squared degrees
    double iou_match_threshold{0.5};
    std::uint64_t seed{42};
};

}  // namespace mlt
