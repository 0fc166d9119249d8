// Test-support oracle: a from-first-principles standard-GLMB joint update
// (survivor/birth subset enumeration and positive 1-1 association maps, with
// the detection factor evaluated directly). Independent of the eta/gamma
// machinery it is used to check; valid when the image factor is flat.
#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "glmbim/filter.hpp"

namespace glmbim::testsupport {

inline std::string assoc_key(const std::vector<TrackLabel>& labels,
                             const std::map<TrackLabel, int>& assoc) {
    std::ostringstream os;
    for (const auto& l : labels) os << l.str() << ":" << assoc.at(l) << ";";
    return os.str();
}

inline std::map<std::string, double> result_weights(const FrameResult& r) {
    std::map<std::string, double> out;
    for (size_t h = 0; h < r.density.components.size(); ++h)
        out[assoc_key(r.density.components[h].labels, r.assoc[h])] +=
            std::exp(r.density.components[h].log_weight);
    return out;
}

inline std::map<std::string, double> reference_standard_update(
    const GlmbDensity& prior, const std::vector<BirthCandidate>& births, const HybridObservation& obs,
    const ScenarioModel& model) {
    const int m = static_cast<int>(obs.detections.size());
    const double kappa = model.sensor.clutter_rate / model.sensor.clutter_area;
    std::map<std::string, double> weights;

    for (const auto& comp : prior.components) {
        struct Row {
            TrackLabel label;
            double stay;
            GaussianDensity predicted;
        };
        std::vector<Row> rows;
        for (const auto& l : comp.labels) {
            const auto& t = comp.tracks.at(l);
            rows.push_back({l, survival_probability(t, prior.frame, model.survival),
                            predict(t.density, model.motion.F(), model.motion.Q(), model.cap)});
        }
        for (const auto& b : births) rows.push_back({b.track.label, b.r, b.track.density});

        std::vector<std::vector<double>> psi(rows.size(), std::vector<double>(static_cast<size_t>(m) + 1));
        for (size_t i = 0; i < rows.size(); ++i) {
            psi[i][0] = 1.0 - model.sensor.pd;
            const Matrix2d S =
                model.sensor.H * rows[i].predicted.cov * model.sensor.H.transpose() + model.sensor.noise;
            const Vector2d mu = model.sensor.H * rows[i].predicted.mean;
            const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
            const Matrix2d Sinv = (Matrix2d() << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0)).finished() / det;
            for (int j = 1; j <= m; ++j) {
                const Vector2d nu = obs.detections[static_cast<size_t>(j - 1)] - mu;
                const double pdf = std::exp(-0.5 * nu.dot(Sinv * nu)) / (2.0 * M_PI * std::sqrt(det));
                psi[i][static_cast<size_t>(j)] = model.sensor.pd * pdf / kappa;
            }
        }

        std::vector<int> gamma(rows.size(), -1);
        std::vector<bool> used(static_cast<size_t>(m) + 1, false);
        auto recurse = [&](auto&& self, size_t i, double w) -> void {
            if (i == rows.size()) {
                std::vector<TrackLabel> labels;
                std::map<TrackLabel, int> assoc;
                for (size_t k = 0; k < rows.size(); ++k)
                    if (gamma[k] >= 0) {
                        labels.push_back(rows[k].label);
                        assoc[rows[k].label] = gamma[k];
                    }
                std::sort(labels.begin(), labels.end());
                weights[assoc_key(labels, assoc)] += w;
                return;
            }
            self(self, i + 1, w * (1.0 - rows[i].stay));
            for (int j = 0; j <= m; ++j) {
                if (j >= 1 && used[static_cast<size_t>(j)]) continue;
                gamma[i] = j;
                if (j >= 1) used[static_cast<size_t>(j)] = true;
                self(self, i + 1, w * rows[i].stay * psi[i][static_cast<size_t>(j)]);
                if (j >= 1) used[static_cast<size_t>(j)] = false;
                gamma[i] = -1;
            }
        };
        recurse(recurse, 0, std::exp(comp.log_weight));
    }

    double total = 0.0;
    for (const auto& [k, w] : weights) total += w;
    for (auto& [k, w] : weights) w /= total;
    return weights;
}

}  // namespace glmbim::testsupport
