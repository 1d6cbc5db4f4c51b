// Stage demo: link features on the crossing scene, print the affinity matrix
// of the resulting tracks, and show which cluster each track lands in.

#include <cstdio>

#include "mlt/pipeline.hpp"
#include "mlt/synth.hpp"

int main() {
    const mlt::SynthResult scene = mlt::generate(mlt::preset("crossing"));
    mlt::TrackerConfig cfg;
    const mlt::PipelineResult r = mlt::run(scene.bundle, cfg);

    for (const auto& b : r.batches)
        std::printf("frames %d..%d: %d/%d tracklets kept, %d low + %d mid tracks, k = %d "
                    "(objective %.3f)\n",
                    b.first_frame, b.last_frame, b.kept_low, b.raw_low, b.low_tracks,
                    b.mid_tracks, b.k, b.objective);

    for (const auto& t : r.trajectories) {
        int detected = 0, filled = 0;
        for (const auto& box : t.boxes)
            (box.provenance == mlt::Provenance::detected ? detected : filled)++;
        std::printf("trajectory %d: frames %d..%d, %d detected + %d filled boxes\n", t.id,
                    t.boxes.front().frame, t.boxes.back().frame, detected, filled);
    }
    return 0;
}
