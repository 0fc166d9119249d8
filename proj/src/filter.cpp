#include "glmbim/filter.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace glmbim {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

bool positive_one_to_one(const AuxiliaryVector& gamma) {
    std::set<int> used;
    for (int g : gamma) {
        if (g < -1) return false;
        if (g >= 1 && !used.insert(g).second) return false;
    }
    return true;
}

UpdateContext::UpdateContext(const HybridObservation& o, const ScenarioModel& m, int pf)
    : obs(o), model(m), prev_frame(pf) {}

const UpdateContext::Predicted& UpdateContext::predicted(const LabeledGaussianTrack& track) {
    auto it = predicted_.find(track.lineage);
    if (it != predicted_.end()) return it->second;
    Predicted p;
    p.ps_bar = survival_probability(track, prev_frame, model.survival);
    p.density = predict(track.density, model.motion.F(), model.motion.Q(), model.cap);
    return predicted_.emplace(track.lineage, std::move(p)).first->second;
}

const UpdateContext::Factor& UpdateContext::factor(std::uint64_t lineage, int j,
                                                   const GaussianDensity& predicted, const Patch& templ) {
    const auto key = std::make_pair(lineage, j);
    auto it = factors_.find(key);
    if (it != factors_.end()) return it->second;
    Factor f;
    try {
        const FactorResult r = hybrid_phi(j, predicted, obs, model.sensor, templ, model.ut, model.cap);
        f.log_phi = r.log_value;
        f.posterior = r.posterior;
    } catch (const std::exception&) {
        f.log_phi = kNegInf;  // annotate-and-continue: a failed entry just gets zero weight
        f.posterior = predicted;
    }
    f.post_lineage = derive_seed(lineage, {static_cast<std::uint64_t>(prev_frame + 1),
                                           static_cast<std::uint64_t>(j + 1)});
    return factors_.emplace(key, std::move(f)).first->second;
}

EtaTable build_eta(const GlmbComponent& component, const std::vector<BirthCandidate>& births,
                   UpdateContext& ctx) {
    const int m = static_cast<int>(ctx.obs.detections.size());
    EtaTable table;
    table.num_detections = m;
    table.rows.reserve(component.labels.size() + births.size());

    auto fill_row = [&](EtaRow& row, const GaussianDensity& predicted, double stay_prob,
                        std::uint64_t lineage) {
        row.log_leave = stay_prob < 1.0 ? std::log(1.0 - stay_prob) : kNegInf;
        assert(std::isfinite(row.log_leave) && "eta(-1) must stay positive");
        const double log_stay = stay_prob > 0.0 ? std::log(stay_prob) : kNegInf;
        row.log_eta.resize(static_cast<size_t>(m) + 1, kNegInf);
        row.posterior.resize(static_cast<size_t>(m) + 1);
        row.post_lineage.resize(static_cast<size_t>(m) + 1, 0);
        for (int j = 0; j <= m; ++j) {
            const auto& f = ctx.factor(lineage, j, predicted, row.templ);
            row.log_eta[static_cast<size_t>(j)] = log_stay + f.log_phi;
            row.posterior[static_cast<size_t>(j)] = f.posterior;
            row.post_lineage[static_cast<size_t>(j)] = f.post_lineage;
        }
    };

    for (const auto& label : component.labels) {
        const auto& track = component.tracks.at(label);
        const auto& pred = ctx.predicted(track);
        EtaRow row;
        row.label = label;
        row.is_birth = false;
        row.templ = track.templ;
        fill_row(row, pred.density, pred.ps_bar, track.lineage);
        table.rows.push_back(std::move(row));
    }
    for (const auto& b : births) {
        EtaRow row;
        row.label = b.track.label;
        row.is_birth = true;
        row.templ = b.track.templ;
        fill_row(row, b.track.density, b.r, b.track.lineage);
        table.rows.push_back(std::move(row));
    }
    return table;
}

AuxiliaryVector init_gamma(const EtaTable& eta) {
    const size_t p = eta.num_rows();
    std::vector<size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    auto row_best = [&](size_t i) {
        double best = eta.rows[i].log_leave;
        for (double v : eta.rows[i].log_eta) best = std::max(best, v);
        return best;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return row_best(a) > row_best(b); });

    AuxiliaryVector gamma(p, -1);
    std::set<int> taken;
    for (size_t i : order) {
        int best_j = -1;
        double best = eta.rows[i].log_leave;
        for (int j = 0; j <= eta.num_detections; ++j) {
            if (j >= 1 && taken.count(j)) continue;
            const double v = eta.log_eta(i, j);
            if (v > best) {
                best = v;
                best_j = j;
            }
        }
        gamma[i] = best_j;
        if (best_j >= 1) taken.insert(best_j);
    }
    return gamma;
}

void gibbs_sweep(AuxiliaryVector& gamma, const EtaTable& eta, Rng& rng) {
    const size_t p = eta.num_rows();
    const int m = eta.num_detections;
    std::vector<int> holder(static_cast<size_t>(m) + 1, -1);  // holder[j] = row holding detection j
    for (size_t i = 0; i < p; ++i)
        if (gamma[i] >= 1) holder[static_cast<size_t>(gamma[i])] = static_cast<int>(i);

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> w(static_cast<size_t>(m) + 2);  // index 0 <-> j = -1
    for (size_t n = 0; n < p; ++n) {
        if (gamma[n] >= 1) holder[static_cast<size_t>(gamma[n])] = -1;  // free own value

        double wmax = kNegInf;
        for (int j = -1; j <= m; ++j) {
            const bool blocked = j >= 1 && holder[static_cast<size_t>(j)] >= 0;
            const double lw = blocked ? kNegInf : eta.log_eta(n, j);
            w[static_cast<size_t>(j + 1)] = lw;
            wmax = std::max(wmax, lw);
        }
        if (!std::isfinite(wmax)) {  // all weights zero: keep current value
            if (gamma[n] >= 1) holder[static_cast<size_t>(gamma[n])] = static_cast<int>(n);
            continue;
        }
        double total = 0.0;
        for (auto& lw : w) {
            lw = std::isfinite(lw) ? std::exp(lw - wmax) : 0.0;
            total += lw;
        }
        double u = u01(rng) * total;
        int pick = m;  // fallback to the last column under fp round-off
        for (int j = -1; j <= m; ++j) {
            u -= w[static_cast<size_t>(j + 1)];
            if (u <= 0.0) {
                pick = j;
                break;
            }
        }
        gamma[n] = pick;
        if (pick >= 1) holder[static_cast<size_t>(pick)] = static_cast<int>(n);
    }
}

std::vector<AuxiliaryVector> gibbs_sample(const AuxiliaryVector& init, int sweeps, const EtaTable& eta,
                                          Rng& rng) {
    if (init.size() != eta.num_rows()) throw std::invalid_argument("gibbs_sample: init size mismatch");
    if (!positive_one_to_one(init)) throw std::invalid_argument("gibbs_sample: init not positive 1-1");

    AuxiliaryVector gamma = init;
    std::set<AuxiliaryVector> distinct;
    distinct.insert(gamma);
    for (int t = 1; t < sweeps; ++t) {
        gibbs_sweep(gamma, eta, rng);
        distinct.insert(gamma);
    }
    return {distinct.begin(), distinct.end()};
}

double log_hypothesis_weight(const EtaTable& eta, const AuxiliaryVector& gamma) {
    double lw = 0.0;
    for (size_t i = 0; i < gamma.size(); ++i) lw += eta.log_eta(i, gamma[i]);
    return lw;
}

namespace {

// Shared tail of both update paths: turn per-component (gamma, weight) pairs
// into the merged, pruned, normalized density plus aligned association maps.
struct Accumulator {
    std::map<std::uint64_t, size_t> index;
    std::vector<GlmbComponent> components;
    std::vector<std::map<TrackLabel, int>> assoc;
    int hypotheses = 0;

    void add(const EtaTable& eta, const AuxiliaryVector& gamma, double log_weight) {
        if (!std::isfinite(log_weight)) return;
        ++hypotheses;
        GlmbComponent comp;
        comp.log_weight = log_weight;
        std::map<TrackLabel, int> amap;
        for (size_t i = 0; i < gamma.size(); ++i) {
            if (gamma[i] < 0) continue;
            const auto& row = eta.rows[i];
            const auto j = static_cast<size_t>(gamma[i]);
            LabeledGaussianTrack track;
            track.label = row.label;
            track.density = row.posterior[j];
            track.templ = row.templ;
            track.lineage = row.post_lineage[j];
            comp.labels.push_back(row.label);
            comp.tracks.emplace(row.label, std::move(track));
            amap.emplace(row.label, gamma[i]);
        }
        std::sort(comp.labels.begin(), comp.labels.end());
        const auto key = comp.merge_key();
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, components.size());
            components.push_back(std::move(comp));
            assoc.push_back(std::move(amap));
        } else {
            components[it->second].log_weight =
                log_sum_exp({components[it->second].log_weight, comp.log_weight});
        }
    }

    FrameResult finish(int next_frame, int num_detections, const FilterParams& params, int components_in) {
        FrameResult out;
        out.diag.components_in = components_in;
        out.diag.hypotheses_sampled = hypotheses;
        out.diag.components_merged = static_cast<int>(components.size());
        if (components.empty()) throw std::runtime_error("update: degenerate density (no finite hypothesis)");

        std::vector<double> lw;
        lw.reserve(components.size());
        for (const auto& c : components) lw.push_back(c.log_weight);
        const double total = log_sum_exp(lw);
        for (auto& c : components) c.log_weight -= total;

        std::vector<size_t> order(components.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return components[a].log_weight > components[b].log_weight;
        });
        const double log_floor = params.prune_floor > 0.0 ? std::log(params.prune_floor) : kNegInf;
        std::vector<double> kept_lw;
        for (size_t i : order) {
            if (static_cast<int>(out.density.components.size()) >= params.h_max) break;
            if (components[i].log_weight < log_floor && !out.density.components.empty()) continue;
            out.density.components.push_back(std::move(components[i]));
            out.assoc.push_back(std::move(assoc[i]));
            kept_lw.push_back(out.density.components.back().log_weight);
        }
        const double kept_total = log_sum_exp(kept_lw);
        for (auto& c : out.density.components) c.log_weight -= kept_total;
        out.density.frame = next_frame;
        out.diag.components_out = static_cast<int>(out.density.components.size());

        out.detection_assoc_weight.assign(static_cast<size_t>(num_detections), 0.0);
        for (size_t h = 0; h < out.density.components.size(); ++h) {
            const double w = std::exp(out.density.components[h].log_weight);
            for (const auto& [label, j] : out.assoc[h])
                if (j >= 1) out.detection_assoc_weight[static_cast<size_t>(j - 1)] += w;
        }
        return out;
    }
};

}  // namespace

FrameResult joint_predict_update(const GlmbDensity& density, const HybridObservation& obs,
                                 const ScenarioModel& model, const std::vector<BirthCandidate>& births,
                                 const FilterParams& params, std::uint64_t seed) {
    const GlmbDensity prior = normalize(density);
    const int h = static_cast<int>(prior.components.size());
    const int next_frame = prior.frame + 1;

    // Trial counts from one shared per-frame generator, drawn up front.
    Rng frame_rng = make_rng(seed, {0x6d756c7469ULL, static_cast<std::uint64_t>(next_frame)});
    std::vector<double> weights(static_cast<size_t>(h));
    for (int i = 0; i < h; ++i) weights[static_cast<size_t>(i)] = std::exp(prior.components[static_cast<size_t>(i)].log_weight);
    std::vector<int> trials(static_cast<size_t>(h), 0);
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    for (int t = 0; t < params.h_max; ++t) ++trials[static_cast<size_t>(pick(frame_rng))];
    for (int i = 0; i < h; ++i)
        if (trials[static_cast<size_t>(i)] == 0 && weights[static_cast<size_t>(i)] > params.prune_floor)
            trials[static_cast<size_t>(i)] = 1;  // never starve a live component

    UpdateContext ctx(obs, model, prior.frame);
    Accumulator acc;
    for (int i = 0; i < h; ++i) {
        if (trials[static_cast<size_t>(i)] == 0) continue;
        const auto& comp = prior.components[static_cast<size_t>(i)];
        const EtaTable eta = build_eta(comp, births, ctx);
        Rng rng = make_rng(seed, {0x6769626273ULL, static_cast<std::uint64_t>(next_frame),
                                  static_cast<std::uint64_t>(i)});
        const AuxiliaryVector start = init_gamma(eta);
        for (const auto& gamma : gibbs_sample(start, trials[static_cast<size_t>(i)], eta, rng))
            acc.add(eta, gamma, comp.log_weight + log_hypothesis_weight(eta, gamma));
    }
    return acc.finish(next_frame, static_cast<int>(obs.detections.size()), params, h);
}

FrameResult exact_update_oracle(const GlmbDensity& density, const HybridObservation& obs,
                                const ScenarioModel& model, const std::vector<BirthCandidate>& births) {
    const GlmbDensity prior = normalize(density);
    const int next_frame = prior.frame + 1;
    const int m = static_cast<int>(obs.detections.size());
    size_t max_rows = 0;
    for (const auto& c : prior.components) max_rows = std::max(max_rows, c.labels.size() + births.size());
    if (max_rows > 8 || m > 6)
        throw std::invalid_argument("exact_update_oracle: instance exceeds enumeration bound");

    UpdateContext ctx(obs, model, prior.frame);
    Accumulator acc;
    FilterParams no_trunc;
    no_trunc.h_max = std::numeric_limits<int>::max();
    no_trunc.prune_floor = 0.0;

    for (const auto& comp : prior.components) {
        const EtaTable eta = build_eta(comp, births, ctx);
        const size_t p = eta.num_rows();
        AuxiliaryVector gamma(p, -1);
        std::vector<bool> used(static_cast<size_t>(m) + 1, false);
        auto recurse = [&](auto&& self, size_t row, double log_w) -> void {
            if (row == p) {
                acc.add(eta, gamma, comp.log_weight + log_w);
                return;
            }
            for (int j = -1; j <= m; ++j) {
                if (j >= 1 && used[static_cast<size_t>(j)]) continue;
                const double lw = eta.log_eta(row, j);
                if (!std::isfinite(lw)) continue;
                gamma[row] = j;
                if (j >= 1) used[static_cast<size_t>(j)] = true;
                self(self, row + 1, log_w + lw);
                if (j >= 1) used[static_cast<size_t>(j)] = false;
                gamma[row] = -1;
            }
        };
        recurse(recurse, 0, 0.0);
    }
    return acc.finish(next_frame, m, no_trunc, static_cast<int>(prior.components.size()));
}

double l1_weight_distance(const GlmbDensity& a, const GlmbDensity& b) {
    std::map<std::uint64_t, double> wa, wb;
    for (const auto& c : a.components) wa[c.merge_key()] += std::exp(c.log_weight);
    for (const auto& c : b.components) wb[c.merge_key()] += std::exp(c.log_weight);
    double d = 0.0;
    for (const auto& [k, w] : wa) {
        auto it = wb.find(k);
        d += std::abs(w - (it == wb.end() ? 0.0 : it->second));
    }
    for (const auto& [k, w] : wb)
        if (!wa.count(k)) d += w;
    return d;
}

double mass_coverage(const GlmbDensity& truncated, const GlmbDensity& reference) {
    std::set<std::uint64_t> keys;
    for (const auto& c : truncated.components) keys.insert(c.merge_key());
    double mass = 0.0;
    for (const auto& c : reference.components)
        if (keys.count(c.merge_key())) mass += std::exp(c.log_weight);
    return mass;
}

GlmbFilter::GlmbFilter(ScenarioModel model, FilterParams params, std::uint64_t seed)
    : model_(std::move(model)), params_(params), seed_(seed), density_(GlmbDensity::empty_prior(-1)) {}

const FrameResult& GlmbFilter::step(const HybridObservation& obs) {
    const int next_frame = density_.frame + 1;
    const auto births =
        birth_components(next_frame, prev_obs_, prev_assoc_weight_, model_.birth, model_.sensor);
    for (const auto& b : births) templates_.emplace(b.track.label, b.track.templ);

    last_ = joint_predict_update(density_, obs, model_, births, params_, seed_);

    // Per-label marginal association weights drive the template refresh.
    std::map<TrackLabel, double> confident_weight;
    for (size_t h = 0; h < last_.density.components.size(); ++h) {
        const double w = std::exp(last_.density.components[h].log_weight);
        for (const auto& [label, j] : last_.assoc[h])
            if (j >= 1) confident_weight[label] += w;
    }
    for (auto& [label, weight] : confident_weight) {
        if (weight < params_.confident_threshold) continue;
        auto it = templates_.find(label);
        if (it == templates_.end()) continue;
        const Vector4d est = track_density(last_.density, label).mean();
        it->second = update_reference_template(it->second, obs.image, est, true, params_.template_alpha);
    }

    // Stamp the authoritative templates back and drop dead labels from the store.
    std::set<TrackLabel> live;
    for (auto& comp : last_.density.components)
        for (auto& [label, track] : comp.tracks) {
            live.insert(label);
            auto it = templates_.find(label);
            if (it != templates_.end()) track.templ = it->second;
        }
    for (auto it = templates_.begin(); it != templates_.end();)
        it = live.count(it->first) ? std::next(it) : templates_.erase(it);

    prev_obs_ = obs;
    prev_assoc_weight_ = last_.detection_assoc_weight;
    density_ = last_.density;
    return last_;
}

std::vector<LabeledEstimate> GlmbFilter::estimates() const {
    return params_.estimator == Estimator::kMme
               ? estimate_mme(density_)
               : estimate_multi_bernoulli(density_, params_.estimator_threshold);
}

}  // namespace glmbim
