// Acceptance gate: exercises the end-to-end guarantees the library ships
// with. Each criterion prints one PASS/FAIL line; the exit code is the
// number of failures. argv[1] must point at the mlt command-line binary
// (used by the determinism criterion).

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mlt/affinity.hpp"
#include "mlt/clustering.hpp"
#include "mlt/flow.hpp"
#include "mlt/io.hpp"
#include "mlt/metrics.hpp"
#include "mlt/pipeline.hpp"
#include "mlt/rng.hpp"
#include "mlt/synth.hpp"
#include "mlt/types.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
    int failures = 0;

    void report(int n, bool ok, const std::string& what) {
        std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << " — " << what << "\n";
        if (!ok) ++failures;
    }
};

// ---- feature-graph helpers -------------------------------------------------

mlt::LinkGraph random_graph(mlt::Rng& rng, mlt::Category cat, int n,
                            const mlt::TrackerConfig& cfg) {
    std::vector<mlt::LinkFeature> feats;
    std::vector<double> costs;
    int frame = 0;
    for (int i = 0; i < n; ++i) {
        frame += 1 + static_cast<int>(rng.uniform01() * 8.0);
        const int len = cat == mlt::Category::low ? static_cast<int>(rng.uniform01() * 4.0) : 0;
        mlt::LinkFeature f;
        f.first_frame = frame;
        f.last_frame = frame + len;
        f.first_pos = {rng.uniform01() * 120.0, rng.uniform01() * 120.0};
        f.last_pos = {rng.uniform01() * 120.0, rng.uniform01() * 120.0};
        f.first_color = {rng.uniform01() * 255.0, rng.uniform01() * 255.0, rng.uniform01() * 255.0};
        f.last_color = {rng.uniform01() * 255.0, rng.uniform01() * 255.0, rng.uniform01() * 255.0};
        frame = f.last_frame;
        feats.push_back(f);
        costs.push_back(cat == mlt::Category::mid ? rng.uniform01() * 12.0 - 8.0 : 0.0);
    }
    return mlt::build_graph(feats, costs, cat, cfg);
}

// Exact solver vs exhaustive enumeration on every graph it can swallow.
bool check_flow_exactness(std::string& note) {
    const auto t0 = Clock::now();
    const mlt::TrackerConfig cfg;
    mlt::Rng rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
        for (const auto cat : {mlt::Category::mid, mlt::Category::low}) {
            const int n = 1 + static_cast<int>(rng.uniform01() * 10.0);
            const auto g = random_graph(rng, cat, n, cfg);
            const auto fast = mlt::solve_linking(g);
            const auto slow = mlt::oracle_solve(g);
            ++checked;
            if (std::abs(fast.total_cost - slow.total_cost) > 1e-9) {
                note = "objective mismatch on graph " + std::to_string(checked);
                return false;
            }
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream ss;
    ss << checked << " random graphs match the exhaustive solver (" << secs << " s)";
    note = ss.str();
    return secs < 30.0;
}

// ---- clustering helpers ----------------------------------------------------

mlt::AffinityMatrix block_matrix(mlt::Rng& rng, int f, int blocks, int n_low,
                                 std::vector<int>& truth) {
    truth.resize(f);
    for (int i = 0; i < f; ++i) truth[i] = i < blocks ? i : static_cast<int>(rng.uniform01() * blocks);
    Eigen::MatrixXd w(f, f);
    for (int i = 0; i < f; ++i) {
        w(i, i) = 1.0;
        for (int j = i + 1; j < f; ++j) {
            const double v = truth[i] == truth[j] ? 0.8 + 0.2 * rng.uniform01()
                                                  : 0.2 * rng.uniform01();
            w(i, j) = w(j, i) = v;
        }
    }
    mlt::AffinityMatrix m;
    m.W = w;
    m.n_low = n_low;
    return m;
}

bool check_clustering_optimality(std::string& note) {
    const auto t0 = Clock::now();
    const mlt::TrackerConfig cfg;
    mlt::Rng rng(7071);
    const int instances = 60;
    for (int trial = 0; trial < instances; ++trial) {
        const int blocks = 1 + static_cast<int>(rng.uniform01() * 4.0);
        const int f = blocks + static_cast<int>(rng.uniform01() * (8.0 - blocks));
        const int n_low = f - blocks;  // one detection track per block keeps the sweep centered
        std::vector<int> truth;
        const auto w = block_matrix(rng, f, blocks, n_low, truth);
        const auto q = mlt::to_cost(w);
        const auto fast = mlt::select_clustering(w, q, cfg);
        const auto slow = mlt::oracle_best_partition(q);
        if (fast.objective != slow.objective) {
            note = "objective differs from exhaustive partition on instance " +
                   std::to_string(trial);
            return false;
        }
        if (fast.k != blocks) {
            note = "picked k=" + std::to_string(fast.k) + ", wanted " + std::to_string(blocks);
            return false;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream ss;
    ss << instances << " block instances solved to optimality with the right k (" << secs
       << " s)";
    note = ss.str();
    return secs < 60.0;
}

// ---- affinity helpers --------------------------------------------------------

mlt::TrackGeometry ptrack(int first, const std::vector<mlt::Vec2>& pts) {
    mlt::TrackGeometry g;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        g.frames.push_back(first + static_cast<int>(k));
        g.points.push_back(pts[k]);
    }
    return g;
}

mlt::TrackGeometry dtrack(int first, const std::vector<mlt::Vec2>& centers, double w, double h) {
    auto g = ptrack(first, centers);
    for (const auto& c : g.points) g.boxes.push_back({c, w, h});
    return g;
}

std::vector<mlt::Vec2> line(const mlt::Vec2& start, const mlt::Vec2& step, int n) {
    std::vector<mlt::Vec2> pts;
    for (int k = 0; k < n; ++k) pts.push_back(start + step * static_cast<double>(k));
    return pts;
}

bool check_affinity_conformance(std::string& note) {
    const mlt::TrackerConfig cfg;
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-6; };

    // frozen values, each recomputable by hand from the formulas
    {
        const auto a = ptrack(1, line({0, 0}, {10, 0}, 4));
        std::vector<mlt::Vec2> rot;
        const double rad = 50.0 * mlt::kPi / 180.0;
        for (int k = 0; k < 4; ++k)
            rot.push_back({10.0 * k * std::cos(rad), 10.0 * k * std::sin(rad)});
        if (!close(mlt::w_angle(a, ptrack(1, rot), cfg), std::exp(-0.5))) {
            note = "50-degree heading difference should score exp(-1/2)";
            return false;
        }
        const auto back = ptrack(1, line({100, 0}, {-10, 0}, 4));
        if (!close(mlt::w_angle(a, back, cfg), std::exp(-180.0 * 180.0 / 5000.0))) {
            note = "antiparallel headings should score exp(-6.48)";
            return false;
        }
    }
    {
        const auto box = dtrack(1, line({50, 104.5}, {0, 0}, 3), 30, 20);
        const mlt::DetectionIndex index({box});
        const auto i = ptrack(1, line({50, 100}, {0, 0}, 3));
        const auto j = ptrack(1, line({50, 109}, {0, 0}, 3));
        if (!close(mlt::w_dist(i, j, index, cfg), 0.5 * (std::exp(-0.5) + 1.0))) {
            note = "half-extent offset should score (exp(-1/2)+1)/2";
            return false;
        }
    }
    {
        const auto da = dtrack(1, {{5, 5}}, 10, 10);
        const auto db = dtrack(1, {{10, 5}}, 10, 10);
        const mlt::DetectionIndex index({da, db});
        if (!close(mlt::w_det(ptrack(1, {{2, 5}}), ptrack(1, {{13, 5}}), index), 1.0 / 3.0)) {
            note = "split consensus across half-overlapping boxes should score 1/3";
            return false;
        }
    }
    {
        const auto a = ptrack(1, line({0, 0}, {2, 0}, 4));
        const auto b = ptrack(1, line({0, 10}, {4, 0}, 4));
        if (!close(mlt::w_speed(a, b), 0.5)) {
            note = "2 px/f vs 4 px/f should score 1/2";
            return false;
        }
        if (!close(mlt::w_velocity(a, b, cfg), 0.875)) {
            note = "parallel tracks at half speed should blend to 0.875";
            return false;
        }
    }
    if (!close(mlt::w_dd_t({0, 1, 2, 3}, {3}), 0.625)) {
        note = "shared-track ratio of {0,1,2,3} vs {3} should score 0.625";
        return false;
    }

    // fuzz: ranges and symmetry over random integer-geometry pairs
    mlt::Rng rng(92);
    auto grid = [&rng](double lo, double hi) {
        return lo + std::floor(rng.uniform01() * (hi - lo));
    };
    for (int trial = 0; trial < 10000; ++trial) {
        const int fi = 1 + static_cast<int>(rng.uniform01() * 4.0);
        const int fj = 1 + static_cast<int>(rng.uniform01() * 8.0);
        std::vector<mlt::Vec2> pi, pj;
        const int ni = 2 + static_cast<int>(rng.uniform01() * 4.0);
        const int nj = 2 + static_cast<int>(rng.uniform01() * 4.0);
        for (int k = 0; k < ni; ++k) pi.push_back({grid(0, 120), grid(0, 120)});
        for (int k = 0; k < nj; ++k) pj.push_back({grid(0, 120), grid(0, 120)});
        const auto a = ptrack(fi, pi);
        const auto b = ptrack(fj, pj);

        std::vector<mlt::TrackGeometry> mids;
        const int n_mid = static_cast<int>(rng.uniform01() * 3.0);
        for (int k = 0; k < n_mid; ++k) {
            std::vector<mlt::Vec2> centers;
            const int len = 2 + static_cast<int>(rng.uniform01() * 8.0);
            for (int f = 0; f < len; ++f) centers.push_back({grid(0, 120), grid(0, 120)});
            mids.push_back(dtrack(1 + static_cast<int>(rng.uniform01() * 3.0), centers, 30, 40));
        }
        const mlt::DetectionIndex index(mids);

        bool overlap = false;
        for (int f : a.frames) overlap = overlap || b.covers(f);

        const double vs = mlt::w_speed(a, b);
        const double va = mlt::w_angle(a, b, cfg);
        const double vv = mlt::w_velocity(a, b, cfg);
        const double pp = mlt::w_pp(a, b, index, mids, cfg);
        for (double v : {vs, va, vv, pp})
            if (!(v >= 0.0 && v <= 1.0)) {
                note = "range violation in trial " + std::to_string(trial);
                return false;
            }
        if (vs != mlt::w_speed(b, a) || va != mlt::w_angle(b, a, cfg) ||
            pp != mlt::w_pp(b, a, index, mids, cfg)) {
            note = "symmetry violation in trial " + std::to_string(trial);
            return false;
        }
        if (overlap) {
            const double wd = mlt::w_det(a, b, index);
            const double wx = mlt::w_dist(a, b, index, cfg);
            if (!(wd >= 0.0 && wd <= 1.0 && wx >= 0.0 && wx <= 1.0) ||
                wd != mlt::w_det(b, a, index) || wx != mlt::w_dist(b, a, index, cfg)) {
                note = "consensus/proximity violation in trial " + std::to_string(trial);
                return false;
            }
        }
        if (mids.size() >= 2)
            for (bool same : {false, true}) {
                const double dd = mlt::w_dd(mids[0], mids[1], same, {a, b});
                if (!(dd >= 0.0 && dd <= 1.0) || dd != mlt::w_dd(mids[1], mids[0], same, {a, b})) {
                    note = "track-pair affinity violation in trial " + std::to_string(trial);
                    return false;
                }
            }
    }
    note = "frozen formula values reproduced; 10000 fuzz pairs clean";
    return true;
}

// ---- end-to-end helpers -------------------------------------------------------

double accuracy(const std::vector<mlt::Trajectory>& gt, const mlt::PipelineResult& r) {
    return mlt::clear_mot(gt, r.trajectories, 0.5).ta;
}

bool check_k_selection(std::string& note) {
    const auto t0 = Clock::now();
    const mlt::TrackerConfig cfg;
    const mlt::SynthResult scene = mlt::generate(mlt::preset("crowd4"));

    const mlt::PipelineResult swept = mlt::run(scene.bundle, cfg);
    const double ta_selected = accuracy(scene.ground_truth, swept);
    const int k0 = swept.selected_k;

    int evaluated = 0;
    for (int k = k0 - 5; k <= k0 + 5; ++k) {
        if (k < 1 || k == k0) continue;
        mlt::PipelineResult forced;
        try {
            forced = mlt::run_forced_k(scene.bundle, cfg, k);
        } catch (const std::exception&) {
            continue;  // more clusters than tracks in some batch
        }
        ++evaluated;
        const double ta_forced = accuracy(scene.ground_truth, forced);
        if (ta_selected + 1e-12 < ta_forced) {
            std::ostringstream ss;
            ss << "forced k=" << k << " scores " << ta_forced << " > selected k=" << k0 << " at "
               << ta_selected;
            note = ss.str();
            return false;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream ss;
    ss << "selected k=" << k0 << " beats or ties " << evaluated << " forced settings ("
       << secs << " s)";
    note = ss.str();
    return secs < 120.0;
}

bool check_coupling_benefit(std::string& note) {
    const mlt::TrackerConfig cfg;
    std::ostringstream ss;
    for (const std::string name : {"occlusion", "crossing"}) {
        const mlt::SynthResult scene = mlt::generate(mlt::preset(name));
        const mlt::MotReport full =
            mlt::clear_mot(scene.ground_truth, mlt::run(scene.bundle, cfg).trajectories, 0.5);
        const mlt::MotReport flat =
            mlt::clear_mot(scene.ground_truth, mlt::run_lp2d(scene.bundle, cfg).trajectories, 0.5);
        ss << name << ": " << full.ta << " vs " << flat.ta << "  ";
        if (full.ta - flat.ta < 0.05) {
            note = name + ": coupled advantage below 0.05 (" + std::to_string(full.ta) + " vs " +
                   std::to_string(flat.ta) + ")";
            return false;
        }
        if (name == "occlusion" && full.idsw != 0) {
            note = "identity switch on the occlusion scene";
            return false;
        }
    }
    note = "coupled tracker leads the detection-only baseline by >= 0.05 (" + ss.str() + ")";
    return true;
}

bool check_track_lengthening(std::string& note) {
    mlt::ScenarioSpec s;
    auto target = [](mlt::Vec2 from, mlt::Vec2 to, mlt::Color3 color) {
        mlt::TargetSpec t;
        t.entry_frame = 1;
        t.exit_frame = 100;
        t.waypoints = {from, to};
        t.base_color = color;
        return t;
    };
    s.targets = {target({40, 150}, {600, 150}, {200, 60, 60}),
                 target({600, 330}, {40, 330}, {60, 60, 200})};
    s.detection_noise = 1.0;
    s.dpt_lifetime = 12;
    const mlt::SynthResult scene = mlt::generate(s);

    std::vector<mlt::LinkFeature> feats;
    std::vector<mlt::FeatureTrack> raw;
    for (std::size_t i = 0; i < scene.bundle.dpts.size(); ++i) {
        const auto& t = scene.bundle.dpts[i];
        mlt::LinkFeature f;
        f.first_frame = t.first_frame();
        f.last_frame = t.last_frame();
        f.first_pos = t.points.front().pos;
        f.last_pos = t.points.back().pos;
        f.first_color = t.points.front().color;
        f.last_color = t.points.back().color;
        feats.push_back(f);

        mlt::FeatureTrack single;
        single.category = mlt::Category::low;
        single.id = static_cast<int>(i) + 1;
        single.members = {{static_cast<int>(i), t.first_frame(), t.last_frame()}};
        raw.push_back(std::move(single));
    }

    const mlt::TrackerConfig cfg;
    const auto flow = mlt::solve_linking(mlt::build_graph(
        feats, std::vector<double>(feats.size(), 0.0), mlt::Category::low, cfg));
    std::vector<mlt::FeatureTrack> linked;
    for (const auto& chain : flow.chains) {
        mlt::FeatureTrack t;
        t.category = mlt::Category::low;
        t.id = static_cast<int>(linked.size()) + 1;
        for (int idx : chain)
            t.members.push_back({idx, feats[static_cast<std::size_t>(idx)].first_frame,
                                 feats[static_cast<std::size_t>(idx)].last_frame});
        linked.push_back(std::move(t));
    }

    const auto before = mlt::track_stats(raw, 100);
    const auto after = mlt::track_stats(linked, 100);
    std::ostringstream ss;
    ss << "span " << before.avg_length_pct << "% -> " << after.avg_length_pct << "%, overlap "
       << before.mean_overlap_frames << " -> " << after.mean_overlap_frames << " frames";
    note = ss.str();
    return after.avg_length_pct >= 2.0 * before.avg_length_pct &&
           after.mean_overlap_frames > before.mean_overlap_frames;
}

mlt::Trajectory make_track(int id, int first, int last, mlt::Vec2 start, mlt::Vec2 step) {
    mlt::Trajectory t;
    t.id = id;
    for (int f = first; f <= last; ++f)
        t.boxes.push_back({f, start + step * static_cast<double>(f - first), 10.0, 20.0,
                           mlt::Provenance::detected});
    return t;
}

bool check_evaluator(std::string& note) {
    // perfect coverage under relabeled ids
    {
        const std::vector<mlt::Trajectory> gt = {make_track(1, 1, 10, {0, 0}, {3, 0}),
                                                 make_track(2, 1, 10, {100, 100}, {-2, 1})};
        const std::vector<mlt::Trajectory> hyp = {make_track(9, 1, 10, {0, 0}, {3, 0}),
                                                  make_track(4, 1, 10, {100, 100}, {-2, 1})};
        const auto r = mlt::clear_mot(gt, hyp, 0.5);
        if (r.ta != 1.0 || r.motp != 1.0 || r.idsw != 0 || r.mt != 2) {
            note = "perfect-coverage scores off";
            return false;
        }
    }
    // no hypotheses at all
    {
        const std::vector<mlt::Trajectory> gt = {make_track(1, 1, 10, {0, 0}, {3, 0})};
        const auto r = mlt::clear_mot(gt, {}, 0.5);
        if (r.ta != 0.0 || r.fn != 10 || r.ml != 1) {
            note = "empty-hypothesis scores off";
            return false;
        }
    }
    // identity handover halfway through
    {
        const std::vector<mlt::Trajectory> gt = {make_track(1, 1, 10, {0, 0}, {3, 0})};
        std::vector<mlt::Trajectory> hyp = {make_track(7, 1, 5, {0, 0}, {3, 0}),
                                            make_track(8, 6, 10, {15, 0}, {3, 0})};
        const auto r = mlt::clear_mot(gt, hyp, 0.5);
        if (r.idsw != 1 || std::abs(r.ta - 0.9) > 1e-12) {
            note = "handover should cost exactly one switch (TA 0.9)";
            return false;
        }
    }
    // relabeling invariance
    mlt::Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<mlt::Trajectory> gt, hyp;
        const int n = 1 + static_cast<int>(rng.uniform01() * 4.0);
        for (int t = 0; t < n; ++t) {
            const int first = 1 + static_cast<int>(rng.uniform01() * 5.0);
            const int last = first + 3 + static_cast<int>(rng.uniform01() * 8.0);
            gt.push_back(make_track(t + 1, first, last, {0, 60.0 * t}, {3, 0}));
            hyp.push_back(make_track(t + 1, first, last,
                                     {rng.uniform01() * 2.0, 60.0 * t}, {3, 0}));
        }
        const auto base = mlt::clear_mot(gt, hyp, 0.5);
        for (auto& t : hyp) t.id = 1000 - t.id * 17;
        const auto relabeled = mlt::clear_mot(gt, hyp, 0.5);
        if (base.ta != relabeled.ta || base.idsw != relabeled.idsw || base.fn != relabeled.fn ||
            base.fp != relabeled.fp || base.frag != relabeled.frag) {
            note = "metrics changed under a pure relabeling";
            return false;
        }
    }
    note = "worked examples exact; relabeling leaves every number unchanged";
    return true;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool check_cli_determinism(const std::string& cli, std::string& note) {
    if (cli.empty()) {
        note = "no tracker binary supplied on the command line";
        return false;
    }
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("mlt-gate-" + std::to_string(::getpid()));
    fs::create_directories(dir);

    auto shell = [&](const std::string& cmd) { return std::system(cmd.c_str()) == 0; };
    const std::string scene = (dir / "scene").string();
    if (!shell("'" + cli + "' synth --preset crowd4 --out '" + scene + "' >/dev/null")) {
        note = "scene generation failed";
        fs::remove_all(dir);
        return false;
    }
    const std::string common = "'" + cli + "' track --det '" + scene + "/det.csv' --dpt '" +
                               scene + "/dpt.csv'";
    const std::string out1 = (dir / "r1.csv").string(), out2 = (dir / "r2.csv").string();
    if (!shell(common + " --out '" + out1 + "' --threads 1 >/dev/null") ||
        !shell(common + " --out '" + out2 + "' --threads 4 >/dev/null")) {
        note = "tracker run failed";
        fs::remove_all(dir);
        return false;
    }
    const std::string a = slurp(out1), b = slurp(out2);
    fs::remove_all(dir);
    if (a.empty() || a != b) {
        note = "results differ between --threads 1 and --threads 4";
        return false;
    }
    note = "tracker output byte-identical across thread counts";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    Gate gate;
    std::string note;

    bool ok = check_flow_exactness(note);
    gate.report(1, ok, note);

    ok = check_clustering_optimality(note);
    gate.report(2, ok, note);

    ok = check_affinity_conformance(note);
    gate.report(3, ok, note);

    ok = check_k_selection(note);
    gate.report(4, ok, note);

    ok = check_coupling_benefit(note);
    gate.report(5, ok, note);

    ok = check_track_lengthening(note);
    gate.report(6, ok, note);

    ok = check_evaluator(note);
    gate.report(7, ok, note);

    ok = check_cli_determinism(cli, note);
    gate.report(8, ok, note);

    if (gate.failures == 0)
        std::cout << "all criteria satisfied\n";
    else
        std::cout << gate.failures << " criterion(s) failed\n";
    return gate.failures == 0 ? 0 : 1;
}
