// End-to-end demo: synthesize a scene, run the tracker and the
// detections-only baseline, and compare their scores.

#include <cstdio>
#include <string>

#include "mlt/metrics.hpp"
#include "mlt/pipeline.hpp"
#include "mlt/synth.hpp"

int main(int argc, char** argv) {
    const std::string name = argc > 1 ? argv[1] : "occlusion";
    const mlt::ScenarioSpec spec = mlt::preset(name);
    const mlt::SynthResult scene = mlt::generate(spec);
    std::printf("%s: %zu detections, %zu point tracklets, %zu targets\n", name.c_str(),
                scene.bundle.detections.size(), scene.bundle.dpts.size(),
                scene.ground_truth.size());

    mlt::TrackerConfig cfg;
    const mlt::PipelineResult full = mlt::run(scene.bundle, cfg);
    const mlt::PipelineResult base = mlt::run_lp2d(scene.bundle, cfg);

    const auto score = [&](const mlt::PipelineResult& r) {
        return mlt::clear_mot(scene.ground_truth, r.trajectories, cfg.iou_match_threshold);
    };
    const mlt::MotReport a = score(full), b = score(base);
    std::printf("coupled : TA %.3f  IDsw %d  trajectories %zu (k = %d)\n", a.ta, a.idsw,
                full.trajectories.size(), full.selected_k);
    std::printf("lp2d    : TA %.3f  IDsw %d  trajectories %zu\n", b.ta, b.idsw,
                base.trajectories.size());
    return 0;
}
