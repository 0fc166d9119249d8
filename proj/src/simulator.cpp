#include "glmbim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace glmbim {

double SnrField::db_at(double x, int width, int frame) const {
    bool left_high = true;
    if (flip_period > 0 && (frame / flip_period) % 2 == 1) left_high = false;
    const bool on_left = x < split_frac * width;
    return (on_left == left_high) ? high_db : low_db;
}

std::vector<TruthFrame> generate_truth(const TruthScenario& scenario, std::uint64_t seed) {
    std::vector<TruthFrame> frames(static_cast<size_t>(scenario.duration));
    const Matrix4d F = scenario.motion.F();
    const double ts = scenario.motion.ts;
    const double sv = scenario.motion.sigma_v;

    for (const auto& track : scenario.tracks) {
        Rng rng = make_rng(seed, {0x7472757468ULL, static_cast<std::uint64_t>(track.id)});
        std::normal_distribution<double> n01(0.0, 1.0);
        Vector4d x = track.x0;
        for (int k = track.birth; k < std::min(track.death, scenario.duration); ++k) {
            if (k > track.birth) {
                x = F * x;
                if (track.process_noise) {
                    const double nx = n01(rng), ny = n01(rng);
                    x(0) += 0.5 * ts * ts * sv * nx;
                    x(1) += ts * sv * nx;
                    x(2) += 0.5 * ts * ts * sv * ny;
                    x(3) += ts * sv * ny;
                }
            }
            TruthState s;
            s.id = track.id;
            s.x = x;
            if (x(0) < 0.0 || x(0) > scenario.width - 1.0 || x(2) < 0.0 || x(2) > scenario.height - 1.0) {
                s.clipped = true;
                s.x(0) = std::clamp(x(0), 0.0, scenario.width - 1.0);
                s.x(2) = std::clamp(x(2), 0.0, scenario.height - 1.0);
                x = s.x;
            }
            frames[static_cast<size_t>(k)].push_back(s);
        }
    }
    return frames;
}

ImageGrid render_image(const TruthFrame& truth, const TruthScenario& scenario, int frame, Rng& rng) {
    constexpr int kSupport = 3;  // template 3-cell radius
    const double sigma_n = scenario.noise_sigma;

    ImageGrid amp(scenario.width, scenario.height, 0.0);
    for (const auto& s : truth) {
        const double px = s.x(0);
        const double py = s.x(2);
        const double db = scenario.snr.db_at(px, scenario.width, frame);
        // A^2 = 2 sigma_n^2 10^(dB/10); noise-free renders keep the nominal sigma_n = 1 amplitude
        const double sn = sigma_n > 0.0 ? sigma_n : 1.0;
        const double a = std::sqrt(2.0 * sn * sn * std::pow(10.0, db / 10.0));
        const int x0 = std::max(0, static_cast<int>(std::ceil(px - kSupport)));
        const int x1 = std::min(scenario.width - 1, static_cast<int>(std::floor(px + kSupport)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(py - kSupport)));
        const int y1 = std::min(scenario.height - 1, static_cast<int>(std::floor(py + kSupport)));
        for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix) {
                const double dr = ix - px;
                const double ds = iy - py;
                amp.at(ix, iy) += a * std::exp(-0.5 * (dr * dr + ds * ds));  // R = S = 1
            }
    }

    ImageGrid out(scenario.width, scenario.height, 0.0);
    if (sigma_n <= 0.0) {
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = amp.v[i] * amp.v[i];
        return out;
    }
    std::normal_distribution<double> noise(0.0, sigma_n);
    for (int iy = 0; iy < scenario.height; ++iy)
        for (int ix = 0; ix < scenario.width; ++ix) {
            const double re = amp.at(ix, iy) + noise(rng);
            const double im = noise(rng);
            out.at(ix, iy) = re * re + im * im;
        }
    return out;
}

std::vector<Vector2d> detect(const ImageGrid& frame, double threshold) {
    std::vector<Vector2d> z;
    std::vector<unsigned char> visited(frame.v.size(), 0);
    for (int iy = 0; iy < frame.height; ++iy) {
        for (int ix = 0; ix < frame.width; ++ix) {
            const size_t idx = static_cast<size_t>(iy) * frame.width + ix;
            if (visited[idx] || frame.v[idx] <= threshold) continue;
            // flood-fill one 8-connected cluster
            double wsum = 0.0, xsum = 0.0, ysum = 0.0;
            std::deque<std::pair<int, int>> queue{{ix, iy}};
            visited[idx] = 1;
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                const double w = frame.at(cx, cy);
                wsum += w;
                xsum += w * cx;
                ysum += w * cy;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= frame.width || ny >= frame.height) continue;
                        const size_t nidx = static_cast<size_t>(ny) * frame.width + nx;
                        if (!visited[nidx] && frame.v[nidx] > threshold) {
                            visited[nidx] = 1;
                            queue.emplace_back(nx, ny);
                        }
                    }
            }
            z.emplace_back(xsum / wsum, ysum / wsum);
        }
    }
    return z;
}

HybridObservation observe(const TruthFrame& truth, const TruthScenario& scenario, int frame, Rng& rng) {
    HybridObservation obs;
    obs.image = render_image(truth, scenario, frame, rng);
    obs.detections = detect(obs.image, scenario.detect_threshold);
    return obs;
}

TruthScenario default_scenario() {
    TruthScenario s;
    s.width = 100;
    s.height = 100;
    s.duration = 100;
    s.detect_threshold = 12.0;
    // Staggered births at the model's birth sites; crossings near frames 22,
    // 55 and 60; early deaths happen close to the scene border.
    s.tracks = {
        {1, 0, 100, (Vector4d() << 5, 0.92, 5, 0.82).finished(), false},
        {2, 5, 92, (Vector4d() << 5, 1.05, 25, -0.12).finished(), false},
        {3, 10, 90, (Vector4d() << 5, 1.15, 90, -0.72).finished(), false},
        {4, 20, 100, (Vector4d() << 90, -1.00, 28, 0.60).finished(), false},
        {5, 40, 100, (Vector4d() << 80, -0.78, 90, -0.70).finished(), false},
    };
    s.snr.flip_period = 0;
    return s;
}

}  // namespace glmbim
