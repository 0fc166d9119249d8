#include "glmbim/rfs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace glmbim {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::uint64_t GlmbComponent::merge_key() const {
    std::uint64_t seed = mix64(labels.size());
    for (const auto& l : labels) {
        seed = mix64(seed ^ l.hash());
        auto it = tracks.find(l);
        seed = mix64(seed ^ (it != tracks.end() ? it->second.lineage : 0));
    }
    return seed;
}

GlmbDensity GlmbDensity::empty_prior(int frame) {
    GlmbDensity d;
    d.frame = frame;
    d.components.push_back(GlmbComponent{});
    return d;
}

Vector4d GaussianMixture::mean() const {
    Vector4d m = Vector4d::Zero();
    for (size_t i = 0; i < weights.size(); ++i) m += weights[i] * components[i].mean;
    return m;
}

double log_sum_exp(const std::vector<double>& log_w) {
    if (log_w.empty()) return kNegInf;
    const double m = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double w : log_w) acc += std::exp(w - m);
    return m + std::log(acc);
}

GlmbDensity normalize(const GlmbDensity& density) {
    std::vector<double> lw;
    lw.reserve(density.components.size());
    for (const auto& c : density.components) lw.push_back(c.log_weight);
    const double total = log_sum_exp(lw);
    if (!std::isfinite(total)) throw std::runtime_error("normalize: degenerate density (no finite weight)");
    GlmbDensity out = density;
    for (auto& c : out.components) c.log_weight -= total;
    return out;
}

std::vector<double> cardinality_distribution(const GlmbDensity& density) {
    size_t n_max = 0;
    for (const auto& c : density.components) n_max = std::max(n_max, c.labels.size());
    std::vector<double> pmf(n_max + 1, 0.0);
    for (const auto& c : density.components) pmf[c.labels.size()] += std::exp(c.log_weight);
    return pmf;
}

double track_existence(const GlmbDensity& density, const TrackLabel& label) {
    double r = 0.0;
    for (const auto& c : density.components)
        if (std::binary_search(c.labels.begin(), c.labels.end(), label)) r += std::exp(c.log_weight);
    return std::min(r, 1.0);
}

GaussianMixture track_density(const GlmbDensity& density, const TrackLabel& label) {
    GaussianMixture mix;
    double r = 0.0;
    for (const auto& c : density.components) {
        auto it = c.tracks.find(label);
        if (it == c.tracks.end()) continue;
        const double w = std::exp(c.log_weight);
        r += w;
        mix.weights.push_back(w);
        mix.components.push_back(it->second.density);
    }
    if (mix.weights.empty() || r <= 0.0)
        throw std::runtime_error("track_density: label " + label.str() + " has no density");
    for (auto& w : mix.weights) w /= r;
    return mix;
}

std::vector<LabeledEstimate> estimate_multi_bernoulli(const GlmbDensity& density, double threshold) {
    // Collect the label universe in canonical order.
    std::vector<TrackLabel> all;
    for (const auto& c : density.components) all.insert(all.end(), c.labels.begin(), c.labels.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());

    std::vector<LabeledEstimate> out;
    for (const auto& l : all) {
        const double r = track_existence(density, l);
        if (r > threshold) out.push_back({l, track_density(density, l).mean(), r});
    }
    return out;
}

std::vector<LabeledEstimate> estimate_mme(const GlmbDensity& density) {
    const auto pmf = cardinality_distribution(density);
    size_t n_star = 0;
    for (size_t n = 1; n < pmf.size(); ++n)
        if (pmf[n] > pmf[n_star]) n_star = n;

    const GlmbComponent* best = nullptr;
    for (const auto& c : density.components) {
        if (c.labels.size() != n_star) continue;
        if (!best || c.log_weight > best->log_weight ||
            (c.log_weight == best->log_weight && c.labels < best->labels))
            best = &c;
    }
    std::vector<LabeledEstimate> out;
    if (!best) return out;
    for (const auto& l : best->labels)
        out.push_back({l, best->tracks.at(l).density.mean, track_existence(density, l)});
    return out;
}

GlmbDensity prune_and_merge(const GlmbDensity& density, int max_components, double min_weight) {
    // Merge duplicates first so their summed weight is judged against the floor.
    std::unordered_map<std::uint64_t, size_t> seen;
    std::vector<GlmbComponent> merged;
    for (const auto& c : density.components) {
        const auto key = c.merge_key();
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, merged.size());
            merged.push_back(c);
        } else {
            merged[it->second].log_weight =
                log_sum_exp({merged[it->second].log_weight, c.log_weight});
        }
    }

    const double log_floor = min_weight > 0.0 ? std::log(min_weight) : kNegInf;
    std::vector<size_t> idx(merged.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return merged[a].log_weight > merged[b].log_weight; });

    GlmbDensity out;
    out.frame = density.frame;
    for (size_t i : idx) {
        if (static_cast<int>(out.components.size()) >= max_components) break;
        if (merged[i].log_weight < log_floor && !out.components.empty()) continue;
        out.components.push_back(std::move(merged[i]));
    }
    return normalize(out);
}

std::string snapshot_json(const GlmbDensity& density) {
    nlohmann::json j;
    j["frame"] = density.frame;
    auto& comps = j["components"] = nlohmann::json::array();
    for (const auto& c : density.components) {
        nlohmann::json jc;
        jc["weight"] = std::exp(c.log_weight);
        auto& labels = jc["labels"] = nlohmann::json::array();
        auto& tracks = jc["tracks"] = nlohmann::json::array();
        for (const auto& l : c.labels) {
            labels.push_back({l.birth_time, l.birth_index});
            const auto& t = c.tracks.at(l);
            nlohmann::json jt;
            jt["label"] = {l.birth_time, l.birth_index};
            jt["mean"] = {t.density.mean(0), t.density.mean(1), t.density.mean(2), t.density.mean(3)};
            jt["cov_diag"] = {t.density.cov(0, 0), t.density.cov(1, 1), t.density.cov(2, 2), t.density.cov(3, 3)};
            tracks.push_back(std::move(jt));
        }
        comps.push_back(std::move(jc));
    }
    return j.dump();
}

}  // namespace glmbim
