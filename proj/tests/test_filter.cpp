#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "glmbim/filter.hpp"
#include "glmbim/harness.hpp"
#include "reference_update.hpp"

using namespace glmbim;
using testsupport::assoc_key;
using testsupport::reference_standard_update;
using testsupport::result_weights;

namespace {

ScenarioModel test_model(bool flat_image = true, bool constant_ps = true) {
    ScenarioModel m = HarnessConfig::defaults().model;
    m.birth.statics.clear();
    m.birth.adaptive_enabled = false;
    m.sensor.image_factor_flat = flat_image;
    m.sensor.clutter_area = 100.0 * 100.0;
    m.survival.age_dependent = !constant_ps;
    m.survival.constant_ps = 0.98;
    return m;
}

LabeledGaussianTrack make_track(TrackLabel label, double x, double y) {
    GaussianDensity d;
    d.mean << x, 0, y, 0;
    d.cov = Vector4d(2, 1, 2, 1).asDiagonal();
    return {label, d, Patch(3, 1.0)};
}

GlmbDensity single_component_prior(const std::vector<LabeledGaussianTrack>& tracks) {
    GlmbComponent c;
    for (const auto& t : tracks) {
        c.labels.push_back(t.label);
        c.tracks.emplace(t.label, t);
    }
    std::sort(c.labels.begin(), c.labels.end());
    GlmbDensity d;
    d.components.push_back(std::move(c));
    d.frame = 0;
    return d;
}

HybridObservation flat_obs(std::vector<Vector2d> detections) {
    HybridObservation obs;
    obs.image = ImageGrid(100, 100, 2.0);
    obs.detections = std::move(detections);
    return obs;
}

BirthCandidate make_birth(TrackLabel label, double x, double y, double r) {
    BirthCandidate b;
    GaussianDensity d;
    d.mean << x, 0, y, 0;
    d.cov = Vector4d(3, 2, 3, 2).asDiagonal();
    b.track = LabeledGaussianTrack(label, d, Patch(3, 1.0));
    b.r = r;
    return b;
}

EtaTable hand_table(const std::vector<std::vector<double>>& eta_by_row) {
    // eta_by_row[i] = {eta(-1), eta(0), ..., eta(M)} in linear domain
    EtaTable t;
    t.num_detections = static_cast<int>(eta_by_row.front().size()) - 2;
    for (size_t i = 0; i < eta_by_row.size(); ++i) {
        EtaRow row;
        row.label = {0, static_cast<int>(i)};
        row.log_leave = std::log(eta_by_row[i][0]);
        for (size_t j = 1; j < eta_by_row[i].size(); ++j)
            row.log_eta.push_back(eta_by_row[i][j] > 0 ? std::log(eta_by_row[i][j])
                                                       : -std::numeric_limits<double>::infinity());
        row.posterior.resize(row.log_eta.size());
        row.post_lineage.resize(row.log_eta.size(), i + 1);
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace

TEST_CASE("eta table of one surviving track with no detections") {
    const auto model = test_model();
    const auto prior = single_component_prior({make_track({0, 0}, 50, 50)});
    HybridObservation obs = flat_obs({});
    UpdateContext ctx(obs, model, 0);
    const auto eta = build_eta(prior.components[0], {}, ctx);

    REQUIRE(eta.num_rows() == 1);
    REQUIRE(eta.num_detections == 0);
    CHECK(eta.log_eta(0, -1) == doctest::Approx(std::log(1.0 - 0.98)).epsilon(1e-12));
    CHECK(eta.log_eta(0, 0) == doctest::Approx(std::log(0.98 * 0.02)).epsilon(1e-12));
}

TEST_CASE("eta table of one birth slot with one detection") {
    const auto model = test_model();
    GlmbComponent empty;
    HybridObservation obs = flat_obs({Vector2d(40, 60)});
    UpdateContext ctx(obs, model, 0);
    const auto births = std::vector<BirthCandidate>{make_birth({1, 0}, 40, 60, 0.03)};
    const auto eta = build_eta(empty, births, ctx);

    REQUIRE(eta.num_rows() == 1);
    REQUIRE(eta.num_detections == 1);
    CHECK(eta.log_eta(0, -1) == doctest::Approx(std::log(0.97)).epsilon(1e-12));
    CHECK(eta.log_eta(0, 0) == doctest::Approx(std::log(0.03 * 0.02)).epsilon(1e-12));
    // detection column: r * pd * sigma_D with the birth density (no prediction)
    const auto expect = detection_snr(Vector2d(40, 60), births[0].track.density, model.sensor);
    CHECK(eta.log_eta(0, 1) ==
          doctest::Approx(std::log(0.03 * 0.98) + expect.log_value).epsilon(1e-12));
}

TEST_CASE("greedy initialization takes the best available columns") {
    // single row: argmax
    auto t1 = hand_table({{0.1, 0.2, 0.7}});
    CHECK(init_gamma(t1) == AuxiliaryVector{1});

    // two rows both preferring column 1: the higher-scoring row wins it
    auto t2 = hand_table({{0.1, 0.1, 0.5}, {0.1, 0.2, 0.9}});
    CHECK(init_gamma(t2) == AuxiliaryVector{0, 1});
}

TEST_CASE("greedy initialization is always positive 1-1 on random tables") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int rows = 1 + static_cast<int>(u(rng) * 6);
        const int m = static_cast<int>(u(rng) * 4);
        std::vector<std::vector<double>> vals(static_cast<size_t>(rows));
        for (auto& row : vals) {
            row.resize(static_cast<size_t>(m) + 2);
            for (auto& v : row) v = u(rng);
        }
        const auto table = hand_table(vals);
        CHECK(positive_one_to_one(init_gamma(table)));
    }
}

TEST_CASE("gibbs chain matches the stationary distribution of a two-state row") {
    const auto table = hand_table({{0.3, 0.7}});
    AuxiliaryVector gamma{-1};
    Rng rng(123);
    int hits = 0;
    const int sweeps = 100000;
    for (int t = 0; t < sweeps; ++t) {
        gibbs_sweep(gamma, table, rng);
        hits += gamma[0] == 0;
    }
    CHECK(static_cast<double>(hits) / sweeps == doctest::Approx(0.7).epsilon(0.015));
}

TEST_CASE("gibbs never emits a positive collision and never picks a zero column") {
    const auto table = hand_table({{0.2, 0.3, 0.5, 0.0}, {0.2, 0.3, 0.5, 0.0}});
    Rng rng(7);
    const auto samples = gibbs_sample({-1, -1}, 20000, table, rng);
    for (const auto& g : samples) {
        CHECK(positive_one_to_one(g));
        CHECK(!(g[0] == 1 && g[1] == 1));
        CHECK(g[0] != 2);  // eta column is zero
        CHECK(g[1] != 2);
    }
}

TEST_CASE("gibbs keeps the current value when every column is blocked") {
    // one detection, both rows can only take it; the second row keeps -1
    const auto table = hand_table({{1e-300, 1.0}, {1e-300, 1.0}});
    // row weights: eta(-1) tiny, eta(0)... here M = 0; use explicit two-column table
    Rng rng(3);
    auto samples = gibbs_sample({-1, -1}, 100, table, rng);
    for (const auto& g : samples) CHECK(positive_one_to_one(g));
}

TEST_CASE("exact oracle: empty prior and no births yields the empty hypothesis") {
    const auto model = test_model();
    GlmbDensity prior = GlmbDensity::empty_prior(0);
    const auto out = exact_update_oracle(prior, flat_obs({Vector2d(10, 10)}), model, {});
    REQUIRE(out.density.components.size() == 1);
    CHECK(out.density.components[0].labels.empty());
    CHECK(std::exp(out.density.components[0].log_weight) == doctest::Approx(1.0));
}

TEST_CASE("exact oracle: one track, no detections gives the two-term sum") {
    const auto model = test_model();
    const auto prior = single_component_prior({make_track({0, 0}, 50, 50)});
    const auto out = exact_update_oracle(prior, flat_obs({}), model, {});
    REQUIRE(out.density.components.size() == 2);
    const double dead = 0.02, alive = 0.98 * 0.02;
    for (const auto& c : out.density.components) {
        const double w = std::exp(c.log_weight);
        if (c.labels.empty())
            CHECK(w == doctest::Approx(dead / (dead + alive)).epsilon(1e-12));
        else
            CHECK(w == doctest::Approx(alive / (dead + alive)).epsilon(1e-12));
    }
}

TEST_CASE("exact oracle weights are normalized on random instances") {
    for (int i = 0; i < 10; ++i) {
        const auto inst = make_small_instance(1000 + i);
        const auto out = exact_update_oracle(inst.prior, inst.obs, inst.model, inst.births);
        double total = 0.0;
        for (const auto& c : out.density.components) total += std::exp(c.log_weight);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("exact oracle refuses oversized instances") {
    const auto model = test_model();
    std::vector<LabeledGaussianTrack> tracks;
    for (int i = 0; i < 9; ++i) tracks.push_back(make_track({0, i}, 10.0 + i, 50));
    const auto prior = single_component_prior(tracks);
    CHECK_THROWS(exact_update_oracle(prior, flat_obs({}), model, {}));
}

TEST_CASE("one track, one detection: posterior hypothesis odds match the oracle") {
    const auto model = test_model();  // pd 0.98, constant ps 0.98, flat image
    const auto prior = single_component_prior({make_track({0, 0}, 50, 50)});
    const auto obs = flat_obs({Vector2d(51, 50)});
    const auto exact = exact_update_oracle(prior, obs, model, {});

    FilterParams params;
    params.h_max = 1000;
    params.prune_floor = 0.0;
    const auto gibbs = joint_predict_update(prior, obs, model, {}, params, 77);

    CHECK(l1_weight_distance(gibbs.density, exact.density) < 1e-9);
    // the three hypotheses: dead, alive-missed, alive-detected
    REQUIRE(exact.density.components.size() == 3);
    const auto w = result_weights(exact);
    const auto pred = predict(prior.components[0].tracks.at({0, 0}).density, model.motion.F(),
                              model.motion.Q(), model.cap);
    const auto [post, loglik] = kalman_update(pred, Vector2d(51, 50), model.sensor.H, model.sensor.noise);
    const double sigma_d = std::exp(loglik) / (model.sensor.clutter_rate / model.sensor.clutter_area);
    const double dead = 0.02, missed = 0.98 * 0.02, detected = 0.98 * 0.98 * sigma_d;
    const double total = dead + missed + detected;
    CHECK(w.at("") == doctest::Approx(dead / total).epsilon(1e-9));
    CHECK(w.at("(0,0):0;") == doctest::Approx(missed / total).epsilon(1e-9));
    CHECK(w.at("(0,0):1;") == doctest::Approx(detected / total).epsilon(1e-9));
}

TEST_CASE("gibbs truncation approaches the exact posterior on a 3+2 track instance") {
    const auto inst = make_small_instance(424242);
    const auto exact = exact_update_oracle(inst.prior, inst.obs, inst.model, inst.births);
    FilterParams params;
    params.h_max = 10000;
    params.prune_floor = 0.0;
    const auto gibbs = joint_predict_update(inst.prior, inst.obs, inst.model, inst.births, params, 9);
    CHECK(l1_weight_distance(gibbs.density, exact.density) <= 0.05);
    CHECK(mass_coverage(gibbs.density, exact.density) >= 0.99);
}

TEST_CASE("increasing the trial budget never increases the distance to the oracle") {
    const auto inst = make_small_instance(321);
    const auto exact = exact_update_oracle(inst.prior, inst.obs, inst.model, inst.births);
    double prev = std::numeric_limits<double>::infinity();
    for (int h : {10, 100, 1000, 10000}) {
        FilterParams params;
        params.h_max = h;
        params.prune_floor = 0.0;
        const auto out = joint_predict_update(inst.prior, inst.obs, inst.model, inst.births, params, 5);
        const double d = l1_weight_distance(out.density, exact.density);
        CHECK(d <= prev + 1e-12);
        prev = d;
    }
}

TEST_CASE("sampled hypothesis weights reproduce the eta products") {
    const auto model = test_model();
    const auto prior = single_component_prior(
        {make_track({0, 0}, 30, 30), make_track({0, 1}, 60, 60)});
    const auto obs = flat_obs({Vector2d(31, 30), Vector2d(59, 61)});
    const auto births = std::vector<BirthCandidate>{make_birth({1, 0}, 45, 45, 0.03)};

    FilterParams params;
    params.h_max = 500;
    params.prune_floor = 0.0;
    const auto out = joint_predict_update(prior, obs, model, births, params, 31);

    UpdateContext ctx(obs, model, prior.frame);
    const auto eta = build_eta(prior.components[0], births, ctx);
    // rows are the component labels then births, in order
    std::vector<TrackLabel> row_labels = {{0, 0}, {0, 1}, {1, 0}};
    std::vector<double> log_ws;
    std::vector<size_t> order;
    for (size_t h = 0; h < out.density.components.size(); ++h) {
        AuxiliaryVector gamma(row_labels.size(), -1);
        for (size_t i = 0; i < row_labels.size(); ++i) {
            auto it = out.assoc[h].find(row_labels[i]);
            if (it != out.assoc[h].end()) gamma[i] = it->second;
        }
        log_ws.push_back(log_hypothesis_weight(eta, gamma));
        order.push_back(h);
    }
    const double total = log_sum_exp(log_ws);
    for (size_t h = 0; h < out.density.components.size(); ++h)
        CHECK(out.density.components[h].log_weight == doctest::Approx(log_ws[h] - total).epsilon(1e-12));
}

TEST_CASE("with a flat image factor the recursion equals the standard GLMB reference") {
    const auto model = test_model(true, true);
    const auto prior = single_component_prior(
        {make_track({0, 0}, 30, 30), make_track({0, 1}, 60, 60), make_track({0, 2}, 30, 60)});
    const auto obs = flat_obs({Vector2d(31, 30), Vector2d(59, 61), Vector2d(20, 20)});
    const auto births = std::vector<BirthCandidate>{make_birth({1, 0}, 45, 45, 0.03),
                                                    make_birth({1, 1}, 20, 20, 0.03)};

    const auto exact = exact_update_oracle(prior, obs, model, births);
    const auto expect = reference_standard_update(prior, births, obs, model);
    const auto got = result_weights(exact);

    REQUIRE(got.size() == expect.size());
    for (const auto& [key, w] : expect) {
        REQUIRE(got.count(key));
        CHECK(got.at(key) == doctest::Approx(w).epsilon(1e-9));
    }
}

TEST_CASE("the flat-image reduction also holds through the age-dependent survival") {
    auto model = test_model(true, false);  // sigmoid survival, flat image
    const auto prior = single_component_prior({make_track({0, 0}, 40, 50), make_track({0, 1}, 70, 20)});
    const auto obs = flat_obs({Vector2d(41, 50)});
    const auto exact = exact_update_oracle(prior, obs, model, {});
    const auto expect = reference_standard_update(prior, {}, obs, model);
    const auto got = result_weights(exact);
    for (const auto& [key, w] : expect) CHECK(got.at(key) == doctest::Approx(w).epsilon(1e-9));
}

TEST_CASE("pd = 0 leaves exactly the all-mis-detected map per label set") {
    auto model = test_model(false, true);  // image factor active
    model.sensor.pd = 0.0;
    const auto prior = single_component_prior({make_track({0, 0}, 30, 30), make_track({0, 1}, 60, 60)});
    HybridObservation obs;
    TruthScenario sc;
    sc.width = 100;
    sc.height = 100;
    Rng rng(5);
    obs.image = render_image({}, sc, 0, rng);
    obs.detections = {Vector2d(31, 30), Vector2d(59, 61)};

    const auto out = exact_update_oracle(prior, obs, model, {});
    std::set<std::vector<TrackLabel>> seen;
    for (size_t h = 0; h < out.density.components.size(); ++h) {
        for (const auto& [label, j] : out.assoc[h]) CHECK(j == 0);
        CHECK(seen.insert(out.density.components[h].labels).second);  // one map per label set
    }
}

TEST_CASE("the update is deterministic given the seed") {
    const auto inst = make_small_instance(606);
    FilterParams params;
    params.h_max = 300;
    const auto a = joint_predict_update(inst.prior, inst.obs, inst.model, inst.births, params, 11);
    const auto b = joint_predict_update(inst.prior, inst.obs, inst.model, inst.births, params, 11);
    REQUIRE(a.density.components.size() == b.density.components.size());
    for (size_t h = 0; h < a.density.components.size(); ++h) {
        CHECK(a.density.components[h].log_weight == b.density.components[h].log_weight);
        CHECK(a.density.components[h].labels == b.density.components[h].labels);
    }
}

TEST_CASE("the update returns a structurally valid normalized GLMB") {
    for (int i = 0; i < 20; ++i) {
        const auto inst = make_small_instance(9000 + i);
        FilterParams params;
        params.h_max = 200;
        const auto out = joint_predict_update(inst.prior, inst.obs, inst.model, inst.births, params,
                                              static_cast<std::uint64_t>(i));
        double total = 0.0;
        for (const auto& c : out.density.components) {
            total += std::exp(c.log_weight);
            CHECK(c.labels.size() == c.tracks.size());
            CHECK(std::adjacent_find(c.labels.begin(), c.labels.end()) == c.labels.end());
            CHECK(std::is_sorted(c.labels.begin(), c.labels.end()));
            for (const auto& [label, track] : c.tracks) CHECK(is_spd(track.density.cov));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("an empty observation is a valid update") {
    ScenarioModel model = test_model(false, false);
    model.birth.statics.push_back({0.03, (Vector4d() << 5, 0, 5, 0).finished(),
                                   Vector4d(3, 2, 3, 2).asDiagonal()});
    GlmbFilter filter(model, {}, 99);
    HybridObservation obs;
    TruthScenario sc;
    sc.width = 100;
    sc.height = 100;
    Rng rng(2);
    obs.image = render_image({}, sc, 0, rng);
    const auto& r = filter.step(obs);
    double total = 0.0;
    for (const auto& c : r.density.components) total += std::exp(c.log_weight);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.detection_assoc_weight.empty());
}

TEST_CASE("a filter sequence is reproducible with the same seed") {
    const auto cfg = HarnessConfig::defaults();
    TruthScenario sc = cfg.scenario;
    sc.duration = 10;
    const auto truth = generate_truth(sc, 4);
    std::vector<HybridObservation> frames;
    Rng rng(8);
    for (int k = 0; k < sc.duration; ++k) frames.push_back(observe(truth[static_cast<size_t>(k)], sc, k, rng));

    GlmbFilter f1(cfg.model, cfg.filter, 17), f2(cfg.model, cfg.filter, 17);
    for (const auto& obs : frames) {
        const auto& a = f1.step(obs);
        const auto& b = f2.step(obs);
        REQUIRE(a.density.components.size() == b.density.components.size());
        for (size_t h = 0; h < a.density.components.size(); ++h)
            CHECK(a.density.components[h].log_weight == b.density.components[h].log_weight);
    }
}
