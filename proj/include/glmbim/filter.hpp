#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "glmbim/models.hpp"
#include "glmbim/observation.hpp"
#include "glmbim/rfs.hpp"
#include "glmbim/seeding.hpp"

namespace glmbim {

// Score table for one prior component. Rows are the component's labels in
// canonical order followed by the frame's birth candidates; columns are the
// association outcomes j = -1 (death / not born), 0 (alive, mis-detected,
// image-updated), 1..M (alive, paired with detection z_j).
struct EtaRow {
    TrackLabel label;
    bool is_birth = false;
    double log_leave = 0.0;            // eta(-1): log(1 - Ps-bar) or log(1 - r_B)
    std::vector<double> log_eta;       // j = 0..M
    std::vector<GaussianDensity> posterior;    // per j = 0..M
    std::vector<std::uint64_t> post_lineage;   // per j = 0..M
    Patch templ;
};

struct EtaTable {
    std::vector<EtaRow> rows;
    int num_detections = 0;

    double log_eta(size_t row, int j) const {
        return j < 0 ? rows[row].log_leave : rows[row].log_eta[static_cast<size_t>(j)];
    }
    size_t num_rows() const { return rows.size(); }
};

// gamma_i in {-1, 0, .., M}; positive values pairwise distinct.
using AuxiliaryVector = std::vector<int>;

bool positive_one_to_one(const AuxiliaryVector& gamma);

// Per-frame cache shared by every component of one update: predicted
// densities and association factors are computed once per distinct track
// lineage, so components referencing the same track never recompute.
class UpdateContext {
public:
    UpdateContext(const HybridObservation& obs, const ScenarioModel& model, int prev_frame);

    const HybridObservation& obs;
    const ScenarioModel& model;
    const int prev_frame;  // the frame being left; births belong to prev_frame + 1

    struct Predicted {
        GaussianDensity density;
        double ps_bar = 0.0;
    };
    const Predicted& predicted(const LabeledGaussianTrack& track);

    struct Factor {
        double log_phi = kLogFloor;
        GaussianDensity posterior;
        std::uint64_t post_lineage = 0;
    };
    const Factor& factor(std::uint64_t lineage, int j, const GaussianDensity& predicted, const Patch& templ);

private:
    std::map<std::uint64_t, Predicted> predicted_;
    std::map<std::pair<std::uint64_t, int>, Factor> factors_;
};

// Rows for survivors of `component` and for every birth candidate; entries
// per the eta recursion (survival/birth prefactor times the integrated
// association factor). A numeric failure in an inner update pins the entry
// at -inf rather than aborting the frame.
EtaTable build_eta(const GlmbComponent& component, const std::vector<BirthCandidate>& births,
                   UpdateContext& ctx);

// Greedy start: rows in descending best-score order each take their best
// still-available column. Always positive 1-1.
AuxiliaryVector init_gamma(const EtaTable& eta);

// One in-place sweep over all coordinates: each gamma_n resampled from the
// categorical over {-1..M} with already-taken positive columns masked out.
void gibbs_sweep(AuxiliaryVector& gamma, const EtaTable& eta, Rng& rng);

// T sweeps of the masked per-coordinate categorical sampler; returns the
// distinct visited vectors (the initial one included), in lexicographic
// order. No burn-in is discarded.
std::vector<AuxiliaryVector> gibbs_sample(const AuxiliaryVector& init, int sweeps, const EtaTable& eta,
                                          Rng& rng);

double log_hypothesis_weight(const EtaTable& eta, const AuxiliaryVector& gamma);

enum class Estimator { kMultiBernoulli, kMme };

struct FilterParams {
    int h_max = 200;                    // Gibbs trial budget and component cap
    double prune_floor = 1e-5;
    Estimator estimator = Estimator::kMme;
    double estimator_threshold = 0.5;   // existence threshold for the multi-Bernoulli extractor
    double confident_threshold = 0.5;   // marginal association weight for template updates
    double template_alpha = 0.1;
};

struct FrameDiagnostics {
    int components_in = 0;
    int hypotheses_sampled = 0;   // pre-merge (h, gamma) pairs with finite weight
    int components_merged = 0;    // distinct after the Unique step
    int components_out = 0;       // after pruning/capping
};

struct FrameResult {
    GlmbDensity density;
    // Per output component: surviving label -> association index (0 = image
    // update). Aligned with density.components.
    std::vector<std::map<TrackLabel, int>> assoc;
    // Per detection: total posterior probability of being paired with any track.
    std::vector<double> detection_assoc_weight;
    FrameDiagnostics diag;
};

// One joint prediction-update step: multinomial trial allocation over prior
// components, per-component Gibbs-truncated enumeration, Unique merge,
// normalize, prune and cap to h_max.
FrameResult joint_predict_update(const GlmbDensity& density, const HybridObservation& obs,
                                 const ScenarioModel& model, const std::vector<BirthCandidate>& births,
                                 const FilterParams& params, std::uint64_t seed);

// Exhaustive version of the same step (every positive 1-1 auxiliary vector of
// every component); ground truth for the Gibbs truncation. Refuses instances
// beyond |I u B| <= 8, |Z| <= 6.
FrameResult exact_update_oracle(const GlmbDensity& density, const HybridObservation& obs,
                                const ScenarioModel& model, const std::vector<BirthCandidate>& births);

// L1 distance between the weight vectors of two densities over the union of
// component identities (label sets + lineages).
double l1_weight_distance(const GlmbDensity& a, const GlmbDensity& b);

// Fraction of `reference` mass carried by component identities present in `truncated`.
double mass_coverage(const GlmbDensity& truncated, const GlmbDensity& reference);

// Recursive tracker: owns the density, the per-label template store and the
// previous frame's data for adaptive birth.
class GlmbFilter {
public:
    GlmbFilter(ScenarioModel model, FilterParams params, std::uint64_t seed);

    // Consume the observation for frame density().frame + 1.
    const FrameResult& step(const HybridObservation& obs);

    const GlmbDensity& density() const { return density_; }
    const FrameResult& last_result() const { return last_; }
    std::vector<LabeledEstimate> estimates() const;

private:
    ScenarioModel model_;
    FilterParams params_;
    std::uint64_t seed_;
    GlmbDensity density_;
    FrameResult last_;
    std::map<TrackLabel, Patch> templates_;
    std::optional<HybridObservation> prev_obs_;
    std::vector<double> prev_assoc_weight_;
};

}  // namespace glmbim
