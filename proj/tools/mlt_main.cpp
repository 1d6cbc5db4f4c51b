// mlt: track people in MOT-format sequences, evaluate results, generate
// synthetic scenes, and sweep the cluster count.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlt/io.hpp"
#include "mlt/metrics.hpp"
#include "mlt/pipeline.hpp"
#include "mlt/synth.hpp"

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

mlt::TrackerConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return mlt::read_config(path);
}

mlt::SequenceBundle load_inputs(const std::string& det_path, const std::string& dpt_path) {
    mlt::SequenceBundle bundle;
    const auto dets = mlt::read_detections(det_path);
    bundle.detections = dets.detections;
    if (!dpt_path.empty()) {
        const auto dpts = mlt::read_dpts(dpt_path);
        bundle.dpts = dpts.tracklets;
    }
    return bundle;
}

int cmd_track(const std::string& det_path, const std::string& dpt_path,
              const std::string& config_path, const std::string& out_path,
              const std::string& diag_path, bool lp2d, int threads) {
    const mlt::TrackerConfig cfg = load_config(config_path);
    const mlt::SequenceBundle bundle = load_inputs(det_path, dpt_path);
    const mlt::PipelineResult result =
        lp2d ? mlt::run_lp2d(bundle, cfg) : mlt::run(bundle, cfg, threads);
    mlt::write_results(out_path, result.trajectories);
    if (!diag_path.empty()) {
        std::ofstream out(diag_path);
        if (!out) throw InputError("cannot write " + diag_path);
        out << mlt::diagnostics_json(result).dump(2) << "\n";
    }
    std::cout << "wrote " << result.trajectories.size() << " trajectories to " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string& gt_path, const std::string& res_path, double iou,
             const std::string& json_path) {
    const auto gt = mlt::read_trajectories(gt_path);
    const auto res = mlt::read_trajectories(res_path);
    const mlt::MotReport r = mlt::clear_mot(gt, res, iou);

    std::printf("%6s %6s %6s %6s %4s %3s %3s %3s %5s %5s %5s %5s\n", "TA", "TP", "Rcll", "Prcn",
                "GT", "MT", "PT", "ML", "FP", "FN", "IDsw", "Frag");
    std::printf("%6.3f %6.3f %6.3f %6.3f %4d %3d %3d %3d %5d %5d %5d %5d\n", r.ta, r.motp,
                r.recall, r.precision, r.gt_tracks, r.mt, r.pt, r.ml, r.fp, r.fn, r.idsw, r.frag);

    if (!json_path.empty()) {
        nlohmann::json j{{"TA", r.ta},        {"TP", r.motp},    {"recall", r.recall},
                         {"precision", r.precision}, {"FP", r.fp}, {"FN", r.fn},
                         {"IDsw", r.idsw},    {"Frag", r.frag},  {"MT", r.mt},
                         {"PT", r.pt},        {"ML", r.ml},      {"GT", r.gt_tracks}};
        std::ofstream out(json_path);
        if (!out) throw InputError("cannot write " + json_path);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_synth(const std::string& preset_name, const std::string& spec_path,
              const std::string& out_dir, std::int64_t seed) {
    mlt::ScenarioSpec spec;
    if (!preset_name.empty()) {
        spec = mlt::preset(preset_name);
    } else {
        std::ifstream in(spec_path);
        if (!in) throw InputError("cannot read " + spec_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InputError(spec_path + ": " + e.what());
        }
        spec = mlt::spec_from_json(j);
    }
    if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);

    const mlt::SynthResult synth = mlt::generate(spec);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    mlt::write_detections((dir / "det.csv").string(), synth.bundle.detections);
    mlt::write_dpts((dir / "dpt.csv").string(), synth.bundle.dpts);
    mlt::write_results((dir / "gt.csv").string(), synth.ground_truth);
    std::ofstream out(dir / "spec.json");
    if (!out) throw InputError("cannot write " + (dir / "spec.json").string());
    out << mlt::spec_to_json(spec).dump(2) << "\n";
    std::cout << "wrote det.csv, dpt.csv, gt.csv, spec.json to " << out_dir << "\n";
    return 0;
}

int cmd_ksweep(const std::string& det_path, const std::string& dpt_path,
               const std::string& config_path, const std::string& gt_path,
               const std::string& out_csv, const std::string& runs_csv, int threads) {
    const mlt::TrackerConfig cfg = load_config(config_path);
    const mlt::SequenceBundle bundle = load_inputs(det_path, dpt_path);
    std::vector<mlt::Trajectory> gt;
    if (!gt_path.empty()) gt = mlt::read_trajectories(gt_path);

    const mlt::PipelineResult base = mlt::run(bundle, cfg, threads);
    if (!runs_csv.empty()) {
        std::ofstream out(runs_csv);
        if (!out) throw InputError("cannot write " + runs_csv);
        for (const auto& e : base.sweep_grid)
            out << e.k << "," << e.run << "," << e.seed << "," << e.objective << "\n";
    }

    std::ofstream out(out_csv);
    if (!out) throw InputError("cannot write " + out_csv);
    const int k0 = base.selected_k;
    for (int k = k0 - cfg.k_sweep_halfwidth; k <= k0 + cfg.k_sweep_halfwidth; ++k) {
        double objective = std::numeric_limits<double>::quiet_NaN();
        double ta = std::numeric_limits<double>::quiet_NaN();
        if (k >= 1) {
            try {
                const mlt::PipelineResult r = mlt::run_forced_k(bundle, cfg, k, threads);
                for (const auto& b : r.batches)
                    if (b.k > 0) {
                        objective = b.objective;
                        break;
                    }
                if (!gt.empty()) ta = mlt::clear_mot(gt, r.trajectories, cfg.iou_match_threshold).ta;
            } catch (const std::invalid_argument&) {
                // k exceeds the track count of some batch; leave the row empty
            }
        }
        out << k << "," << objective << "," << ta << "\n";
    }
    std::cout << "wrote sweep to " << out_csv << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled detection / point-tracklet people tracker"};
    app.require_subcommand(1);

    std::string det_path, dpt_path, config_path, out_path, diag_path;
    std::string gt_path, res_path, json_path;
    std::string preset_name, spec_path, out_dir, out_csv, runs_csv;
    double iou = 0.5;
    std::int64_t seed = -1;
    int threads = 0;
    bool lp2d = false;

    auto* track = app.add_subcommand("track", "run the tracker on a sequence");
    track->add_option("--det", det_path, "detections CSV")->required();
    track->add_option("--dpt", dpt_path, "point tracklets CSV");
    track->add_option("--config", config_path, "tracker config JSON");
    track->add_option("--out", out_path, "output trajectories CSV")->required();
    track->add_option("--diag", diag_path, "write per-batch diagnostics JSON here");
    track->add_flag("--lp2d", lp2d, "detections-only baseline");
    track->add_option("--threads", threads, "worker threads (0 = all cores)");

    auto* eval = app.add_subcommand("eval", "score results against ground truth");
    eval->add_option("--gt", gt_path, "ground-truth CSV")->required();
    eval->add_option("--res", res_path, "result CSV")->required();
    eval->add_option("--iou", iou, "match threshold (default 0.5)");
    eval->add_option("--json", json_path, "also dump metrics JSON here");

    auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
    auto* preset_opt = synth->add_option("--preset", preset_name, "scene preset name");
    synth->add_option("--spec", spec_path, "scenario JSON")->excludes(preset_opt);
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--seed", seed, "override the scenario seed");

    auto* ksweep = app.add_subcommand("ksweep", "track at each forced cluster count");
    ksweep->add_option("--det", det_path, "detections CSV")->required();
    ksweep->add_option("--dpt", dpt_path, "point tracklets CSV");
    ksweep->add_option("--config", config_path, "tracker config JSON");
    ksweep->add_option("--gt", gt_path, "ground truth for the TA column");
    ksweep->add_option("--out-csv", out_csv, "k,objective,TA rows go here")->required();
    ksweep->add_option("--runs-csv", runs_csv, "per-proposal k,run,seed,objective rows");
    ksweep->add_option("--threads", threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (track->parsed())
            return cmd_track(det_path, dpt_path, config_path, out_path, diag_path, lp2d, threads);
        if (eval->parsed()) return cmd_eval(gt_path, res_path, iou, json_path);
        if (synth->parsed()) {
            if (preset_name.empty() && spec_path.empty())
                throw InputError("synth needs --preset or --spec");
            return cmd_synth(preset_name, spec_path, out_dir, seed);
        }
        if (ksweep->parsed())
            return cmd_ksweep(det_path, dpt_path, config_path, gt_path, out_csv, runs_csv, threads);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
