#include "glmbim/config.hpp"

#include <fstream>
#include <stdexcept>

namespace glmbim {

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& path) {
    throw std::runtime_error("config: bad or missing value for key '" + path + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, const T& fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad_key(path + key);
    }
}

Vector4d vec4(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4) bad_key(path);
    Vector4d v;
    for (int i = 0; i < 4; ++i) {
        if (!j[static_cast<size_t>(i)].is_number()) bad_key(path);
        v(i) = j[static_cast<size_t>(i)].get<double>();
    }
    return v;
}

json to_array(const Vector4d& v) { return json::array({v(0), v(1), v(2), v(3)}); }

}  // namespace

HarnessConfig HarnessConfig::defaults() {
    HarnessConfig cfg;
    cfg.scenario = default_scenario();

    // Paper-style birth model: five fixed slots, diag(3,2,3,2) spread.
    const Matrix4d p_gamma = Vector4d(3, 2, 3, 2).asDiagonal();
    const double r_b = 0.03;
    for (const auto& mean : {Vector4d(5, 0, 5, 0), Vector4d(5, 0, 25, 0), Vector4d(5, 0, 90, 0),
                             Vector4d(90, 0, 30, 0), Vector4d(80, 0, 90, 0)})
        cfg.model.birth.statics.push_back({r_b, mean, p_gamma});
    cfg.model.birth.adaptive_cov = p_gamma;
    cfg.model.birth.adaptive_enabled = true;

    cfg.model.survival.mask = SceneMask::border_margin(cfg.scenario.width, cfg.scenario.height, 10);
    cfg.model.sensor.clutter_area = static_cast<double>(cfg.scenario.width) * cfg.scenario.height;
    cfg.model.motion = cfg.scenario.motion;
    return cfg;
}

HarnessConfig HarnessConfig::from_json(const json& j) {
    HarnessConfig cfg = defaults();
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "");

    if (j.contains("scenario")) {
        const auto& js = j.at("scenario");
        auto& sc = cfg.scenario;
        sc.width = get_or(js, "width", sc.width, "scenario.");
        sc.height = get_or(js, "height", sc.height, "scenario.");
        sc.duration = get_or(js, "duration", sc.duration, "scenario.");
        sc.detect_threshold = get_or(js, "detect_threshold", sc.detect_threshold, "scenario.");
        if (js.contains("snr")) {
            const auto& jn = js.at("snr");
            sc.snr.high_db = get_or(jn, "high_db", sc.snr.high_db, "scenario.snr.");
            sc.snr.low_db = get_or(jn, "low_db", sc.snr.low_db, "scenario.snr.");
            sc.snr.split_frac = get_or(jn, "split_frac", sc.snr.split_frac, "scenario.snr.");
            sc.snr.flip_period = get_or(jn, "flip_period", sc.snr.flip_period, "scenario.snr.");
        }
        if (js.contains("tracks")) {
            if (!js.at("tracks").is_array()) bad_key("scenario.tracks");
            sc.tracks.clear();
            int i = 0;
            for (const auto& jt : js.at("tracks")) {
                const std::string path = "scenario.tracks[" + std::to_string(i++) + "].";
                TruthTrack t;
                t.id = get_or(jt, "id", i, path);
                t.birth = get_or(jt, "birth", 0, path);
                t.death = get_or(jt, "death", sc.duration, path);
                if (!jt.contains("state")) bad_key(path + "state");
                t.x0 = vec4(jt.at("state"), path + "state");
                t.process_noise = get_or(jt, "process_noise", false, path);
                if (t.birth >= t.death) bad_key(path + "birth");
                sc.tracks.push_back(t);
            }
        }
        cfg.model.sensor.clutter_area = static_cast<double>(sc.width) * sc.height;
    }

    if (j.contains("model")) {
        const auto& jm = j.at("model");
        if (jm.contains("motion")) {
            const auto& jo = jm.at("motion");
            cfg.model.motion.ts = get_or(jo, "ts", cfg.model.motion.ts, "model.motion.");
            cfg.model.motion.sigma_v = get_or(jo, "sigma_v", cfg.model.motion.sigma_v, "model.motion.");
            cfg.scenario.motion = cfg.model.motion;
        }
        if (jm.contains("birth")) {
            const auto& jb = jm.at("birth");
            auto& b = cfg.model.birth;
            const double r = get_or(jb, "r", 0.03, "model.birth.");
            const Vector4d cd = jb.contains("cov_diag") ? vec4(jb.at("cov_diag"), "model.birth.cov_diag")
                                                        : Vector4d(3, 2, 3, 2);
            if (jb.contains("means")) {
                if (!jb.at("means").is_array()) bad_key("model.birth.means");
                b.statics.clear();
                for (const auto& jmn : jb.at("means"))
                    b.statics.push_back({r, vec4(jmn, "model.birth.means[]"), Matrix4d(cd.asDiagonal())});
            } else {
                for (auto& s : b.statics) {
                    s.r = r;
                    s.cov = cd.asDiagonal();
                }
            }
            if (jb.contains("adaptive")) {
                const auto& ja = jb.at("adaptive");
                b.adaptive_enabled = get_or(ja, "enabled", b.adaptive_enabled, "model.birth.adaptive.");
                b.adaptive_r = get_or(ja, "r", b.adaptive_r, "model.birth.adaptive.");
                b.weak_assoc_threshold =
                    get_or(ja, "weak_assoc_threshold", b.weak_assoc_threshold, "model.birth.adaptive.");
                if (ja.contains("cov_diag"))
                    b.adaptive_cov = vec4(ja.at("cov_diag"), "model.birth.adaptive.cov_diag").asDiagonal();
            }
            for (const auto& s : b.statics)
                if (s.r <= 0.0 || s.r >= 1.0) bad_key("model.birth.r");
        }
        if (jm.contains("survival")) {
            const auto& js = jm.at("survival");
            auto& s = cfg.model.survival;
            s.gamma = get_or(js, "gamma", s.gamma, "model.survival.");
            s.constant_ps = get_or(js, "constant_ps", s.constant_ps, "model.survival.");
            s.sigma_point_integration =
                get_or(js, "sigma_point_integration", s.sigma_point_integration, "model.survival.");
            if (s.gamma <= 0.0) bad_key("model.survival.gamma");
            cfg.mask_pgm = get_or<std::string>(js, "mask_pgm", cfg.mask_pgm, "model.survival.");
            const int margin = get_or(js, "border_margin", 10, "model.survival.");
            s.mask = cfg.mask_pgm.empty()
                         ? SceneMask::border_margin(cfg.scenario.width, cfg.scenario.height, margin)
                         : SceneMask::from_pgm(cfg.mask_pgm);
        }
        if (jm.contains("sensor")) {
            const auto& js = jm.at("sensor");
            auto& s = cfg.model.sensor;
            s.pd = get_or(js, "pd", s.pd, "model.sensor.");
            s.clutter_rate = get_or(js, "clutter_rate", s.clutter_rate, "model.sensor.");
            const double sd = get_or(js, "detection_sigma", 4.0, "model.sensor.");
            s.noise = Matrix2d(Vector2d(sd * sd, sd * sd).asDiagonal());
            s.template_sigma = get_or(js, "template_sigma", s.template_sigma, "model.sensor.");
            s.patch_size = get_or(js, "patch_size", s.patch_size, "model.sensor.");
            s.assumed_snr_db = get_or(js, "assumed_snr_db", s.assumed_snr_db, "model.sensor.");
            if (s.pd < 0.0 || s.pd > 1.0) bad_key("model.sensor.pd");
            if (s.clutter_rate <= 0.0) bad_key("model.sensor.clutter_rate");
        }
    }

    if (j.contains("filter")) {
        const auto& jf = j.at("filter");
        auto& f = cfg.filter;
        f.h_max = get_or(jf, "h_max", f.h_max, "filter.");
        f.prune_floor = get_or(jf, "prune_floor", f.prune_floor, "filter.");
        f.estimator_threshold = get_or(jf, "estimator_threshold", f.estimator_threshold, "filter.");
        const std::string est = get_or<std::string>(jf, "estimator", "mme", "filter.");
        if (est == "mme") f.estimator = Estimator::kMme;
        else if (est == "mb") f.estimator = Estimator::kMultiBernoulli;
        else bad_key("filter.estimator");
        f.confident_threshold = get_or(jf, "confident_threshold", f.confident_threshold, "filter.");
        f.template_alpha = get_or(jf, "template_alpha", f.template_alpha, "filter.");
        if (f.h_max <= 0) bad_key("filter.h_max");
        if (jf.contains("ut")) {
            const auto& ju = jf.at("ut");
            cfg.model.ut.alpha = get_or(ju, "alpha", cfg.model.ut.alpha, "filter.ut.");
            cfg.model.ut.beta = get_or(ju, "beta", cfg.model.ut.beta, "filter.ut.");
            cfg.model.ut.kappa = get_or(ju, "kappa", cfg.model.ut.kappa, "filter.ut.");
            if (cfg.model.ut.alpha <= 0.0 || cfg.model.ut.alpha > 1.0) bad_key("filter.ut.alpha");
        }
        const double pv = get_or(jf, "pos_var_cap", 100.0, "filter.");
        const double vv = get_or(jf, "vel_var_cap", 100.0, "filter.");
        cfg.model.cap = CovarianceCap::positional(pv, vv);
    }

    if (j.contains("ospa")) {
        const auto& jo = j.at("ospa");
        cfg.ospa.cutoff_c = get_or(jo, "cutoff_c", cfg.ospa.cutoff_c, "ospa.");
        cfg.ospa.order_p = get_or(jo, "order_p", cfg.ospa.order_p, "ospa.");
        if (cfg.ospa.cutoff_c <= 0.0 || cfg.ospa.order_p < 1.0) bad_key("ospa.cutoff_c");
    }

    if (j.contains("mc")) {
        const auto& jm = j.at("mc");
        cfg.mc_runs = get_or(jm, "runs", cfg.mc_runs, "mc.");
        cfg.occlusion_distance = get_or(jm, "occlusion_distance", cfg.occlusion_distance, "mc.");
        if (cfg.mc_runs <= 0) bad_key("mc.runs");
    }
    return cfg;
}

nlohmann::json HarnessConfig::to_json() const {
    json j;
    j["seed"] = seed;
    auto& js = j["scenario"];
    js["width"] = scenario.width;
    js["height"] = scenario.height;
    js["duration"] = scenario.duration;
    js["detect_threshold"] = scenario.detect_threshold;
    js["snr"] = {{"high_db", scenario.snr.high_db},
                 {"low_db", scenario.snr.low_db},
                 {"split_frac", scenario.snr.split_frac},
                 {"flip_period", scenario.snr.flip_period}};
    js["tracks"] = json::array();
    for (const auto& t : scenario.tracks)
        js["tracks"].push_back({{"id", t.id},
                                {"birth", t.birth},
                                {"death", t.death},
                                {"state", to_array(t.x0)},
                                {"process_noise", t.process_noise}});

    auto& jm = j["model"];
    jm["motion"] = {{"ts", model.motion.ts}, {"sigma_v", model.motion.sigma_v}};
    auto& jb = jm["birth"];
    jb["r"] = model.birth.statics.empty() ? 0.03 : model.birth.statics.front().r;
    jb["cov_diag"] = model.birth.statics.empty()
                         ? json::array({3, 2, 3, 2})
                         : to_array(model.birth.statics.front().cov.diagonal());
    jb["means"] = json::array();
    for (const auto& s : model.birth.statics) jb["means"].push_back(to_array(s.mean));
    jb["adaptive"] = {{"enabled", model.birth.adaptive_enabled},
                      {"r", model.birth.adaptive_r},
                      {"cov_diag", to_array(model.birth.adaptive_cov.diagonal())},
                      {"weak_assoc_threshold", model.birth.weak_assoc_threshold}};
    jm["survival"] = {{"gamma", model.survival.gamma},
                      {"constant_ps", model.survival.constant_ps},
                      {"border_margin", 10},
                      {"mask_pgm", mask_pgm},
                      {"sigma_point_integration", model.survival.sigma_point_integration}};
    jm["sensor"] = {{"pd", model.sensor.pd},
                    {"clutter_rate", model.sensor.clutter_rate},
                    {"detection_sigma", std::sqrt(model.sensor.noise(0, 0))},
                    {"template_sigma", model.sensor.template_sigma},
                    {"patch_size", model.sensor.patch_size},
                    {"assumed_snr_db", model.sensor.assumed_snr_db}};

    j["filter"] = {{"h_max", filter.h_max},
                   {"prune_floor", filter.prune_floor},
                   {"estimator", filter.estimator == Estimator::kMme ? "mme" : "mb"},
                   {"estimator_threshold", filter.estimator_threshold},
                   {"confident_threshold", filter.confident_threshold},
                   {"template_alpha", filter.template_alpha},
                   {"ut", {{"alpha", model.ut.alpha}, {"beta", model.ut.beta}, {"kappa", model.ut.kappa}}},
                   {"pos_var_cap", model.cap.max_var(0)},
                   {"vel_var_cap", model.cap.max_var(1)}};
    j["ospa"] = {{"cutoff_c", ospa.cutoff_c}, {"order_p", ospa.order_p}};
    j["mc"] = {{"runs", mc_runs}, {"occlusion_distance", occlusion_distance}};
    return j;
}

HarnessConfig HarnessConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    return from_json(j);
}

void HarnessConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
    out << to_json().dump(2) << "\n";
}

std::string variant_name(Variant v) { return v == Variant::kStandard ? "glmb" : "glmb-im"; }

Variant parse_variant(const std::string& name) {
    if (name == "glmb") return Variant::kStandard;
    if (name == "glmb-im") return Variant::kImage;
    throw std::runtime_error("config: unknown variant '" + name + "' (expected glmb|glmb-im)");
}

ScenarioModel variant_model(const HarnessConfig& cfg, Variant v) {
    ScenarioModel m = cfg.model;
    if (v == Variant::kStandard) {
        m.sensor.image_factor_flat = true;
        m.survival.age_dependent = false;
    } else {
        m.sensor.image_factor_flat = false;
        m.survival.age_dependent = true;
    }
    return m;
}

}  // namespace glmbim
