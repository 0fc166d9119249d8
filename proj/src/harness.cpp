#include "glmbim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace glmbim {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<Vector2d> truth_positions(const TruthFrame& frame) {
    std::vector<Vector2d> pts;
    pts.reserve(frame.size());
    for (const auto& s : frame) pts.emplace_back(s.x(0), s.x(2));
    return pts;
}

std::vector<Vector2d> estimate_positions(const std::vector<LabeledEstimate>& est) {
    std::vector<Vector2d> pts;
    pts.reserve(est.size());
    for (const auto& e : est) pts.emplace_back(e.state(0), e.state(2));
    return pts;
}

bool has_occlusion(const TruthFrame& frame, double dist) {
    for (size_t i = 0; i < frame.size(); ++i)
        for (size_t j = i + 1; j < frame.size(); ++j) {
            const double dx = frame[i].x(0) - frame[j].x(0);
            const double dy = frame[i].x(2) - frame[j].x(2);
            if (std::sqrt(dx * dx + dy * dy) < dist) return true;
        }
    return false;
}

bool has_low_snr(const TruthFrame& frame, const TruthScenario& sc, int k) {
    for (const auto& s : frame)
        if (sc.snr.db_at(s.x(0), sc.width, k) == sc.snr.low_db) return true;
    return false;
}

struct SingleRun {
    std::vector<FrameMetrics> rows;
    bool failed = false;
};

SingleRun execute_run(const HarnessConfig& cfg, const std::vector<TruthFrame>& truth, int run,
                      std::uint64_t seed) {
    SingleRun out;
    try {
        Rng render_rng = make_rng(seed, {0x72656e646572ULL, static_cast<std::uint64_t>(run)});
        std::vector<HybridObservation> frames(static_cast<size_t>(cfg.scenario.duration));
        for (int k = 0; k < cfg.scenario.duration; ++k)
            frames[static_cast<size_t>(k)] =
                observe(truth[static_cast<size_t>(k)], cfg.scenario, k, render_rng);

        for (Variant v : {Variant::kStandard, Variant::kImage}) {
            GlmbFilter filter(variant_model(cfg, v), cfg.filter,
                              derive_seed(seed, {0x66696c746572ULL, static_cast<std::uint64_t>(run),
                                                 static_cast<std::uint64_t>(v == Variant::kImage)}));
            for (int k = 0; k < cfg.scenario.duration; ++k) {
                filter.step(frames[static_cast<size_t>(k)]);
                const auto est = filter.estimates();
                FrameMetrics fm;
                fm.run = run;
                fm.frame = k;
                fm.variant = v;
                fm.truth_n = static_cast<int>(truth[static_cast<size_t>(k)].size());
                fm.est_n = static_cast<int>(est.size());
                fm.ospa = ospa(estimate_positions(est), truth_positions(truth[static_cast<size_t>(k)]),
                               cfg.ospa);
                fm.occlusion = has_occlusion(truth[static_cast<size_t>(k)], cfg.occlusion_distance);
                fm.low_snr = has_low_snr(truth[static_cast<size_t>(k)], cfg.scenario, k);
                out.rows.push_back(fm);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "run " << run << " failed: " << e.what() << "\n";
        out.failed = true;
        out.rows.clear();
    }
    return out;
}

}  // namespace

VariantAggregate aggregate_variant(const std::vector<FrameMetrics>& rows, Variant v) {
    VariantAggregate agg;
    std::map<int, std::pair<double, int>> per_run;  // run -> (ospa sum, count)
    double sum = 0.0, sum_loc = 0.0, sum_card = 0.0, sum_flagged = 0.0;
    int n = 0, n_flagged = 0, n_card_ok = 0;
    for (const auto& r : rows) {
        if (r.variant != v) continue;
        sum += r.ospa.total;
        sum_loc += r.ospa.loc;
        sum_card += r.ospa.card;
        ++n;
        if (std::abs(r.est_n - r.truth_n) <= 1) ++n_card_ok;
        if (r.occlusion || r.low_snr) {
            sum_flagged += r.ospa.total;
            ++n_flagged;
        }
        auto& pr = per_run[r.run];
        pr.first += r.ospa.total;
        pr.second += 1;
    }
    if (n == 0) return agg;
    agg.mean_ospa = sum / n;
    agg.mean_loc = sum_loc / n;
    agg.mean_card = sum_card / n;
    agg.mean_ospa_flagged = n_flagged > 0 ? sum_flagged / n_flagged : 0.0;
    agg.card_within_one = static_cast<double>(n_card_ok) / n;
    if (per_run.size() > 1) {
        std::vector<double> means;
        for (const auto& [run, acc] : per_run) means.push_back(acc.first / acc.second);
        double mu = 0.0;
        for (double m : means) mu += m;
        mu /= static_cast<double>(means.size());
        double var = 0.0;
        for (double m : means) var += (m - mu) * (m - mu);
        var /= static_cast<double>(means.size() - 1);
        agg.se_ospa = std::sqrt(var / static_cast<double>(means.size()));
    }
    return agg;
}

RunReport run_monte_carlo(const HarnessConfig& cfg, int runs, std::uint64_t seed) {
    RunReport report;
    report.runs = runs;
    const auto truth = generate_truth(cfg.scenario, derive_seed(seed, {0x7472757468ULL}));

    std::vector<std::future<SingleRun>> futures;
    futures.reserve(static_cast<size_t>(runs));
    for (int r = 0; r < runs; ++r)
        futures.push_back(std::async(std::launch::async, execute_run, std::cref(cfg), std::cref(truth),
                                     r, seed));
    for (int r = 0; r < runs; ++r) {
        SingleRun sr = futures[static_cast<size_t>(r)].get();
        if (sr.failed) {
            report.failed_runs.push_back(r);
            continue;
        }
        report.rows.insert(report.rows.end(), sr.rows.begin(), sr.rows.end());
    }
    for (Variant v : {Variant::kStandard, Variant::kImage})
        report.aggregates[variant_name(v)] = aggregate_variant(report.rows, v);
    return report;
}

void write_frame_metrics_csv(const std::vector<FrameMetrics>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "frame,run,variant,ospa,loc,card,truth_n,est_n,occlusion,low_snr\n";
    for (const auto& r : rows)
        out << r.frame << ',' << r.run << ',' << variant_name(r.variant) << ',' << fmt_double(r.ospa.total)
            << ',' << fmt_double(r.ospa.loc) << ',' << fmt_double(r.ospa.card) << ',' << r.truth_n << ','
            << r.est_n << ',' << (r.occlusion ? 1 : 0) << ',' << (r.low_snr ? 1 : 0) << '\n';
}

std::vector<FrameMetrics> read_frame_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::vector<FrameMetrics> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        FrameMetrics r;
        std::getline(ss, tok, ',');
        r.frame = std::stoi(tok);
        std::getline(ss, tok, ',');
        r.run = std::stoi(tok);
        std::getline(ss, tok, ',');
        r.variant = parse_variant(tok);
        std::getline(ss, tok, ',');
        r.ospa.total = std::stod(tok);
        std::getline(ss, tok, ',');
        r.ospa.loc = std::stod(tok);
        std::getline(ss, tok, ',');
        r.ospa.card = std::stod(tok);
        std::getline(ss, tok, ',');
        r.truth_n = std::stoi(tok);
        std::getline(ss, tok, ',');
        r.est_n = std::stoi(tok);
        std::getline(ss, tok, ',');
        r.occlusion = tok == "1";
        std::getline(ss, tok, ',');
        r.low_snr = tok == "1";
        rows.push_back(r);
    }
    return rows;
}

void write_report_json(const RunReport& report, const HarnessConfig& cfg, const std::string& path) {
    nlohmann::json j;
    j["runs"] = report.runs;
    j["failed_runs"] = report.failed_runs;
    j["config"] = cfg.to_json();
    for (const auto& [name, agg] : report.aggregates) {
        j["aggregates"][name] = {
            {"mean_ospa", agg.mean_ospa},           {"mean_loc", agg.mean_loc},
            {"mean_card", agg.mean_card},           {"se_ospa", agg.se_ospa},
            {"mean_ospa_flagged", agg.mean_ospa_flagged}, {"card_within_one", agg.card_within_one}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

TrackOutput track_sequence(const std::vector<HybridObservation>& frames, const ScenarioModel& model,
                           const FilterParams& params, std::uint64_t seed) {
    GlmbFilter filter(model, params, seed);
    TrackOutput out;
    out.per_frame.reserve(frames.size());
    for (const auto& obs : frames) {
        filter.step(obs);
        out.per_frame.push_back(filter.estimates());
        out.snapshots.push_back(snapshot_json(filter.density()));
    }
    return out;
}

void write_tracks_csv(const TrackOutput& out, int run, Variant v, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << "frame,run,variant,label_birth_time,label_index,x,y,exist_prob\n";
    for (size_t k = 0; k < out.per_frame.size(); ++k)
        for (const auto& e : out.per_frame[k])
            f << k << ',' << run << ',' << variant_name(v) << ',' << e.label.birth_time << ','
              << e.label.birth_index << ',' << fmt_double(e.state(0)) << ',' << fmt_double(e.state(2))
              << ',' << fmt_double(e.existence) << '\n';
}

void write_points_csv(const std::vector<std::vector<Vector2d>>& frames,
                      const std::vector<std::vector<int>>& ids, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << "frame,id,x,y\n";
    for (size_t k = 0; k < frames.size(); ++k)
        for (size_t i = 0; i < frames[k].size(); ++i) {
            const int id = (k < ids.size() && i < ids[k].size()) ? ids[k][i] : static_cast<int>(i);
            f << k << ',' << id << ',' << fmt_double(frames[k][i](0)) << ',' << fmt_double(frames[k][i](1))
              << '\n';
        }
}

std::map<int, std::vector<Vector2d>> read_points_csv(const std::string& path, int x_col, int y_col) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::map<int, std::vector<Vector2d>> frames;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        const int frame = std::stoi(cols.at(0));
        frames[frame].emplace_back(std::stod(cols.at(static_cast<size_t>(x_col))),
                                   std::stod(cols.at(static_cast<size_t>(y_col))));
    }
    return frames;
}

void write_frames_bin(const std::vector<ImageGrid>& frames, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    nlohmann::json hdr;
    hdr["count"] = frames.size();
    hdr["width"] = frames.empty() ? 0 : frames[0].width;
    hdr["height"] = frames.empty() ? 0 : frames[0].height;
    const std::string h = hdr.dump();
    const std::uint32_t len = static_cast<std::uint32_t>(h.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& f : frames)
        out.write(reinterpret_cast<const char*>(f.v.data()),
                  static_cast<std::streamsize>(f.v.size() * sizeof(double)));
}

SmallInstance make_small_instance(std::uint64_t seed, int max_tracks, int n_births, int max_detections) {
    Rng rng = make_rng(seed, {0x696e7374ULL});
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    SmallInstance inst;
    inst.model = HarnessConfig::defaults().model;
    inst.model.birth.statics.clear();
    inst.model.sensor.clutter_area = 40.0 * 40.0;
    inst.model.survival.mask = SceneMask::border_margin(40, 40, 4);

    TruthScenario sc;
    sc.width = 40;
    sc.height = 40;
    sc.duration = 1;
    sc.detect_threshold = 13.8;

    const int n_tracks = static_cast<int>(u01(rng) * (max_tracks + 1));
    const Matrix4d track_cov = Vector4d(2.0, 1.0, 2.0, 1.0).asDiagonal();
    const Patch nominal = nominal_object_template(inst.model.sensor);
    GlmbComponent comp;
    TruthFrame truth;
    for (int i = 0; i < n_tracks; ++i) {
        Vector4d mean;
        mean << 6.0 + 28.0 * u01(rng), 2.0 * u01(rng) - 1.0, 6.0 + 28.0 * u01(rng), 2.0 * u01(rng) - 1.0;
        LabeledGaussianTrack t({0, i}, {mean, track_cov}, nominal);
        comp.labels.push_back(t.label);
        comp.tracks.emplace(t.label, std::move(t));
        truth.push_back({i, mean, false});
    }
    comp.log_weight = 0.0;
    inst.prior.components.push_back(std::move(comp));
    inst.prior.frame = 0;

    Rng render_rng = make_rng(seed, {0x696d67ULL});
    inst.obs.image = render_image(truth, sc, 0, render_rng);
    // detections near the true objects plus clutter, capped
    std::normal_distribution<double> n01(0.0, 1.0);
    for (const auto& s : truth) {
        if (static_cast<int>(inst.obs.detections.size()) >= max_detections) break;
        if (u01(rng) < 0.85)
            inst.obs.detections.emplace_back(s.x(0) + 2.0 * n01(rng), s.x(2) + 2.0 * n01(rng));
    }
    while (static_cast<int>(inst.obs.detections.size()) < max_detections && u01(rng) < 0.5)
        inst.obs.detections.emplace_back(40.0 * u01(rng), 40.0 * u01(rng));

    for (int b = 0; b < n_births; ++b) {
        Vector4d mean;
        mean << 6.0 + 28.0 * u01(rng), 0.0, 6.0 + 28.0 * u01(rng), 0.0;
        BirthCandidate cand;
        cand.track = LabeledGaussianTrack({1, b}, {mean, Matrix4d(Vector4d(3, 2, 3, 2).asDiagonal())},
                                          extract_patch(inst.obs.image, mean(0), mean(2), 3));
        cand.r = 0.03;
        inst.births.push_back(std::move(cand));
    }
    return inst;
}

OracleCheckResult oracle_check_battery(int instances, int trials, std::uint64_t seed) {
    OracleCheckResult res;
    res.instances = instances;
    FilterParams params;
    params.h_max = trials;
    params.prune_floor = 0.0;
    for (int i = 0; i < instances; ++i) {
        const auto inst = make_small_instance(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        const auto exact = exact_update_oracle(inst.prior, inst.obs, inst.model, inst.births);
        const auto gibbs =
            joint_predict_update(inst.prior, inst.obs, inst.model, inst.births, params,
                                 derive_seed(seed, {0x676273ULL, static_cast<std::uint64_t>(i)}));
        res.max_l1 = std::max(res.max_l1, l1_weight_distance(gibbs.density, exact.density));
        res.min_coverage = std::min(res.min_coverage, mass_coverage(gibbs.density, exact.density));
    }
    return res;
}

std::vector<ImageGrid> read_frames_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string h(len, '\0');
    in.read(h.data(), len);
    const auto hdr = nlohmann::json::parse(h);
    const size_t count = hdr.at("count").get<size_t>();
    const int w = hdr.at("width").get<int>();
    const int hgt = hdr.at("height").get<int>();
    std::vector<ImageGrid> frames(count, ImageGrid(w, hgt));
    for (auto& f : frames) {
        in.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
        if (!in) throw std::runtime_error("frames.bin: truncated");
    }
    return frames;
}

}  // namespace glmbim
