#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "glmbim/gaussian.hpp"
#include "glmbim/image.hpp"
#include "glmbim/labels.hpp"

namespace glmbim {

// A labeled track: Gaussian kinematic density plus reference appearance
// template. `lineage` identifies the track's birth label and association
// history; two tracks with equal lineage carry identical densities by
// construction, which is what licenses weight merging without storing the
// full association history.
struct LabeledGaussianTrack {
    TrackLabel label;
    GaussianDensity density;
    Patch templ;
    std::uint64_t lineage = 0;

    LabeledGaussianTrack() = default;
    LabeledGaussianTrack(TrackLabel l, GaussianDensity d, Patch t)
        : label(l), density(std::move(d)), templ(std::move(t)), lineage(l.hash()) {}
};

// One GLMB hypothesis: label set I, log omega, and the per-label densities.
struct GlmbComponent {
    std::vector<TrackLabel> labels;  // sorted, distinct
    double log_weight = 0.0;
    std::map<TrackLabel, LabeledGaussianTrack> tracks;

    std::uint64_t merge_key() const;  // hashes (labels, lineages)
};

struct GlmbDensity {
    std::vector<GlmbComponent> components;
    int frame = 0;

    static GlmbDensity empty_prior(int frame = 0);
};

struct GaussianMixture {
    std::vector<double> weights;  // sum to 1
    std::vector<GaussianDensity> components;

    Vector4d mean() const;
};

struct LabeledEstimate {
    TrackLabel label;
    Vector4d state;
    double existence = 1.0;
};

double log_sum_exp(const std::vector<double>& log_w);

// Rescale weights to sum to 1 (log domain). Throws on an empty or all -inf
// density ("degenerate density").
GlmbDensity normalize(const GlmbDensity& density);

// pmf over {0..max |I|}; density must be normalized.
std::vector<double> cardinality_distribution(const GlmbDensity& density);

// r(l) = total weight of components containing l.
double track_existence(const GlmbDensity& density, const TrackLabel& label);

// The label's weight-normalized Gaussian mixture. Throws if the label is
// absent from every component.
GaussianMixture track_density(const GlmbDensity& density, const TrackLabel& label);

// Labels with r(l) > threshold, each with its mixture mean.
std::vector<LabeledEstimate> estimate_multi_bernoulli(const GlmbDensity& density, double threshold);

// MAP cardinality, then the highest-weight component of that cardinality
// (ties: lexicographically smallest label set), per-track means.
std::vector<LabeledEstimate> estimate_mme(const GlmbDensity& density);

// Merge duplicate components (same labels + lineages; weights add), drop
// components below min_weight, keep at most max_components by descending
// weight, renormalize.
GlmbDensity prune_and_merge(const GlmbDensity& density, int max_components, double min_weight);

// Per-frame snapshot record: frame, per-component labels + weight, per-track
// mean / cov diagonal. One JSON object (single line).
std::string snapshot_json(const GlmbDensity& density);

}  // namespace glmbim
