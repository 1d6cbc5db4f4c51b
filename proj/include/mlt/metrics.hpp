#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "mlt/assignment.hpp"
#include "mlt/geometry.hpp"
#include "mlt/types.hpp"

namespace mlt {

struct MotReport {
    double ta{0.0};         // 1 - (FN + FP + IDsw) / total GT boxes
    double motp{0.0};       // mean IoU over matches
    double recall{0.0};
    double precision{0.0};
    int fn{0};
    int fp{0};
    int idsw{0};
    int frag{0};
    int mt{0};              // GT tracks covered > 80%
    int pt{0};
    int ml{0};              // GT tracks covered < 20%
    int gt_tracks{0};
    int total_gt{0};        // GT boxes over all frames
    int matches{0};

    double mt_pct() const { return gt_tracks ? 100.0 * mt / gt_tracks : 0.0; }
    double pt_pct() const { return gt_tracks ? 100.0 * pt / gt_tracks : 0.0; }
    double ml_pct() const { return gt_tracks ? 100.0 * ml / gt_tracks : 0.0; }
};

namespace detail {

struct FrameBoxes {
    std::vector<int> ids;
    std::vector<Box> boxes;
};

inline std::map<int, FrameBoxes> index_by_frame(const std::vector<Trajectory>& trajs,
                                                const char* side) {
    std::map<int, FrameBoxes> out;
    std::set<std::pair<int, int>> seen;
    for (const auto& t : trajs)
        for (const auto& b : t.boxes) {
            if (!seen.insert({b.frame, t.id}).second)
                throw std::invalid_argument(std::string("clear_mot: duplicate (frame, id) in ") +
                                            side + ": frame " + std::to_string(b.frame) + ", id " +
                                            std::to_string(t.id));
            auto& fb = out[b.frame];
            fb.ids.push_back(t.id);
            fb.boxes.push_back(b.box());
        }
    for (auto& [frame, fb] : out) {
        std::vector<int> order(fb.ids.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fb.ids[a] < fb.ids[b]; });
        FrameBoxes sorted;
        for (int i : order) {
            sorted.ids.push_back(fb.ids[i]);
            sorted.boxes.push_back(fb.boxes[i]);
        }
        fb = std::move(sorted);
    }
    return out;
}

}  // namespace detail

/// CLEAR-protocol evaluation: per frame, carry over still-valid matches from
/// the previous frame, then assign the remainder by maximum total IoU (pairs
/// below the threshold never match). Identity switches compare against each
/// GT target's last known match, across gaps.
inline MotReport clear_mot(const std::vector<Trajectory>& gt, const std::vector<Trajectory>& hyp,
                           double iou_threshold) {
    const auto gt_frames = detail::index_by_frame(gt, "ground truth");
    const auto hyp_frames = detail::index_by_frame(hyp, "hypotheses");

    std::set<int> frames;
    for (const auto& [f, fb] : gt_frames) frames.insert(f);
    for (const auto& [f, fb] : hyp_frames) frames.insert(f);

    MotReport r;
    double sum_iou = 0.0;
    std::map<int, int> last_match;             // gt id -> last known hyp id
    std::map<int, int> prev_matches;           // matches at the previous frame
    std::map<int, std::vector<char>> matched;  // gt id -> per-present-frame matched flags

    static const detail::FrameBoxes kEmpty;
    for (int f : frames) {
        const auto git = gt_frames.find(f);
        const auto hit = hyp_frames.find(f);
        const auto& g = git != gt_frames.end() ? git->second : kEmpty;
        const auto& h = hit != hyp_frames.end() ? hit->second : kEmpty;

        std::map<int, int> now;
        std::vector<char> g_used(g.ids.size(), 0), h_used(h.ids.size(), 0);

        // carry-over
        for (std::size_t gi = 0; gi < g.ids.size(); ++gi) {
            const auto pm = prev_matches.find(g.ids[gi]);
            if (pm == prev_matches.end()) continue;
            const auto hpos = std::find(h.ids.begin(), h.ids.end(), pm->second);
            if (hpos == h.ids.end()) continue;
            const std::size_t hi = static_cast<std::size_t>(hpos - h.ids.begin());
            if (h_used[hi]) continue;
            const double o = iou(g.boxes[gi], h.boxes[hi]);
            if (o < iou_threshold) continue;
            g_used[gi] = 1;
            h_used[hi] = 1;
            now[g.ids[gi]] = h.ids[hi];
            sum_iou += o;
        }

        // optimal assignment on the remainder
        std::vector<int> g_rest, h_rest;
        for (std::size_t gi = 0; gi < g.ids.size(); ++gi)
            if (!g_used[gi]) g_rest.push_back(static_cast<int>(gi));
        for (std::size_t hi = 0; hi < h.ids.size(); ++hi)
            if (!h_used[hi]) h_rest.push_back(static_cast<int>(hi));
        if (!g_rest.empty() && !h_rest.empty()) {
            std::vector<std::vector<double>> cost(g_rest.size(),
                                                  std::vector<double>(h_rest.size()));
            for (std::size_t a = 0; a < g_rest.size(); ++a)
                for (std::size_t b = 0; b < h_rest.size(); ++b) {
                    const double o = iou(g.boxes[g_rest[a]], h.boxes[h_rest[b]]);
                    cost[a][b] = o < iou_threshold ? kForbiddenCost : -o;
                }
            const auto row_to_col = solve_assignment(cost);
            for (std::size_t a = 0; a < g_rest.size(); ++a) {
                if (row_to_col[a] == -1) continue;
                const int gi = g_rest[a], hi = h_rest[row_to_col[a]];
                now[g.ids[gi]] = h.ids[hi];
                sum_iou += iou(g.boxes[gi], h.boxes[hi]);
            }
        }

        for (const auto& [gid, hid] : now) {
            ++r.matches;
            const auto lm = last_match.find(gid);
            if (lm != last_match.end() && lm->second != hid) ++r.idsw;
            last_match[gid] = hid;
        }
        r.fn += static_cast<int>(g.ids.size() - now.size());
        r.fp += static_cast<int>(h.ids.size() - now.size());
        r.total_gt += static_cast<int>(g.ids.size());
        for (int gid : g.ids) matched[gid].push_back(now.count(gid) ? 1 : 0);
        prev_matches = std::move(now);
    }

    r.gt_tracks = static_cast<int>(matched.size());
    for (const auto& [gid, flags] : matched) {
        const int present = static_cast<int>(flags.size());
        const int hit = static_cast<int>(std::count(flags.begin(), flags.end(), 1));
        const double coverage = present ? static_cast<double>(hit) / present : 0.0;
        if (coverage > 0.8)
            ++r.mt;
        else if (coverage < 0.2)
            ++r.ml;
        else
            ++r.pt;
        bool was_matched = false, in_gap = false;
        for (char m : flags) {
            if (m) {
                if (was_matched && in_gap) ++r.frag;
                was_matched = true;
                in_gap = false;
            } else if (was_matched) {
                in_gap = true;
            }
        }
    }

    r.ta = 1.0 - static_cast<double>(r.fn + r.fp + r.idsw) / std::max(1, r.total_gt);
    r.motp = r.matches ? sum_iou / r.matches : 0.0;
    r.recall = static_cast<double>(r.matches) / std::max(1, r.total_gt);
    r.precision = static_cast<double>(r.matches) / std::max(1, r.matches + r.fp);
    return r;
}

struct TrackStatsReport {
    int n_tracks{0};
    double avg_length_pct{0.0};       // mean frame span as % of the sequence length
    double mean_overlap_frames{0.0};  // mean co-visible frames over overlapping pairs
    double idsw_per_traj{-1.0};       // -1 when no identity labels were supplied
};

/// Span and pairwise-overlap statistics of a set of feature tracks.
inline TrackStatsReport track_stats(const std::vector<FeatureTrack>& tracks,
                                    int sequence_length) {
    if (sequence_length <= 0) throw std::invalid_argument("track_stats: sequence length must be positive");
    TrackStatsReport r;
    r.n_tracks = static_cast<int>(tracks.size());
    if (tracks.empty()) return r;
    double span_sum = 0.0;
    for (const auto& t : tracks) {
        const auto [first, last] = track_frame_span(t);
        span_sum += last - first + 1;
    }
    r.avg_length_pct = 100.0 * span_sum / tracks.size() / sequence_length;

    double overlap_sum = 0.0;
    int overlap_pairs = 0;
    for (std::size_t i = 0; i < tracks.size(); ++i)
        for (std::size_t j = i + 1; j < tracks.size(); ++j) {
            const auto common = common_frames(tracks[i], tracks[j]);
            if (common.empty()) continue;
            overlap_sum += static_cast<double>(common.size());
            ++overlap_pairs;
        }
    r.mean_overlap_frames = overlap_pairs ? overlap_sum / overlap_pairs : 0.0;
    return r;
}

/// Adds identity-switch counting: each covered frame of a low track takes the
/// identity of the GT box containing its point (smallest id on overlap, -1
/// when outside all boxes); switches are changes between consecutive
/// non-background identities along the track.
inline TrackStatsReport track_stats(const std::vector<FeatureTrack>& tracks, int sequence_length,
                                    const std::vector<DptTracklet>& dpts,
                                    const std::vector<Trajectory>& gt) {
    TrackStatsReport r = track_stats(tracks, sequence_length);
    std::map<int, std::vector<std::pair<int, Box>>> gt_by_frame;
    for (const auto& t : gt)
        for (const auto& b : t.boxes) gt_by_frame[b.frame].emplace_back(t.id, b.box());
    for (auto& [frame, entries] : gt_by_frame)
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

    int switches = 0;
    for (const auto& t : tracks) {
        int prev_identity = -1;
        for (const auto& mbr : t.members) {
            const auto& trk = dpts.at(mbr.feature);
            for (const auto& p : trk.points) {
                int identity = -1;
                const auto it = gt_by_frame.find(p.frame);
                if (it != gt_by_frame.end())
                    for (const auto& [gid, box] : it->second)
                        if (box.contains(p.pos)) {
                            identity = gid;
                            break;
                        }
                if (identity == -1) continue;
                if (prev_identity != -1 && identity != prev_identity) ++switches;
                prev_identity = identity;
            }
        }
    }
    r.idsw_per_traj = tracks.empty() ? 0.0 : static_cast<double>(switches) / tracks.size();
    return r;
}

}  // namespace mlt
