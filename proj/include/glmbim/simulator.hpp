#pragma once

#include <cstdint>
#include <vector>

#include "glmbim/gaussian.hpp"
#include "glmbim/image.hpp"
#include "glmbim/models.hpp"
#include "glmbim/observation.hpp"
#include "glmbim/seeding.hpp"

namespace glmbim {

// Spatial/temporal SNR layout: vertical half-plane split, optionally swapping
// the halves every flip_period frames.
struct SnrField {
    double high_db = 10.0;
    double low_db = 7.0;
    double split_frac = 0.5;  // boundary at split_frac * width
    int flip_period = 0;      // 0: static split

    double db_at(double x, int width, int frame) const;
};

struct TruthTrack {
    int id = 0;
    int birth = 0;   // first frame present
    int death = 0;   // first frame absent
    Vector4d x0 = Vector4d::Zero();
    bool process_noise = false;
};

struct TruthScenario {
    int width = 100;
    int height = 100;
    int duration = 100;
    double noise_sigma = 1.0;  // per-component complex noise std
    std::vector<TruthTrack> tracks;
    SnrField snr;
    double detect_threshold = 12.0;
    MotionModel motion;
};

struct TruthState {
    int id = 0;
    Vector4d x = Vector4d::Zero();
    bool clipped = false;  // hit the image border
};

using TruthFrame = std::vector<TruthState>;

// Propagate every track by the CV model (optional process noise), birth to
// death, clipped at the image border. frames[k] holds the states at frame k.
std::vector<TruthFrame> generate_truth(const TruthScenario& scenario, std::uint64_t seed);

// Power-return image: per cell |sum of object amplitudes + complex noise|^2.
// Amplitude from the local SNR via A^2 = 2 sigma_n^2 10^(dB/10), sigma_n = 1.
// Point spread exp(-(dr^2/2R + ds^2/2S)) with R = S = 1, support radius 3.
ImageGrid render_image(const TruthFrame& truth, const TruthScenario& scenario, int frame, Rng& rng);

// Hard threshold, 8-connected clustering, one power-weighted centroid per
// cluster (so mutually occluding objects merge into one detection).
std::vector<Vector2d> detect(const ImageGrid& frame, double threshold);

// Convenience: rendered image + detections for one frame.
HybridObservation observe(const TruthFrame& truth, const TruthScenario& scenario, int frame, Rng& rng);

// The desk-scale default: 5 tracks with staggered births over frames 1..40
// on a 100x100 scene, 100 frames (a reconstruction; the original schedule is
// not published).
TruthScenario default_scenario();

}  // namespace glmbim
