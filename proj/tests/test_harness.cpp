#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "glmbim/harness.hpp"

using namespace glmbim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("config defaults survive a JSON round trip") {
    const auto cfg = HarnessConfig::defaults();
    const auto again = HarnessConfig::from_json(cfg.to_json());
    CHECK(again.scenario.duration == cfg.scenario.duration);
    CHECK(again.scenario.detect_threshold == doctest::Approx(cfg.scenario.detect_threshold));
    CHECK(again.scenario.tracks.size() == cfg.scenario.tracks.size());
    CHECK(again.model.birth.statics.size() == cfg.model.birth.statics.size());
    CHECK(again.model.sensor.pd == doctest::Approx(cfg.model.sensor.pd));
    CHECK(again.model.survival.gamma == doctest::Approx(cfg.model.survival.gamma));
    CHECK(again.filter.h_max == cfg.filter.h_max);
    CHECK(again.ospa.cutoff_c == doctest::Approx(cfg.ospa.cutoff_c));
    CHECK(again.mc_runs == cfg.mc_runs);
}

TEST_CASE("malformed config names the offending key") {
    nlohmann::json j;
    j["model"]["sensor"]["pd"] = "not a number";
    try {
        HarnessConfig::from_json(j);
        FAIL("expected a throw");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("model.sensor.pd") != std::string::npos);
    }

    nlohmann::json j2;
    j2["filter"]["h_max"] = -3;
    try {
        HarnessConfig::from_json(j2);
        FAIL("expected a throw");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("filter.h_max") != std::string::npos);
    }
}

TEST_CASE("variant models differ only in the image factor and survival law") {
    const auto cfg = HarnessConfig::defaults();
    const auto std_model = variant_model(cfg, Variant::kStandard);
    const auto img_model = variant_model(cfg, Variant::kImage);
    CHECK(std_model.sensor.image_factor_flat);
    CHECK(!std_model.survival.age_dependent);
    CHECK(!img_model.sensor.image_factor_flat);
    CHECK(img_model.survival.age_dependent);
    CHECK(std_model.sensor.pd == img_model.sensor.pd);
    CHECK(std_model.birth.statics.size() == img_model.birth.statics.size());
}

TEST_CASE("variant names round trip and bad names are rejected") {
    CHECK(parse_variant("glmb") == Variant::kStandard);
    CHECK(parse_variant("glmb-im") == Variant::kImage);
    CHECK(variant_name(Variant::kImage) == "glmb-im");
    CHECK_THROWS(parse_variant("glmb-2"));
}

TEST_CASE("frame metrics CSV round trips exactly") {
    TempDir dir("glmbim_test_csv");
    std::vector<FrameMetrics> rows;
    FrameMetrics a;
    a.frame = 3;
    a.run = 1;
    a.variant = Variant::kImage;
    a.ospa = {1.234567890123456789, 0.5, 0.7346578901234568};
    a.truth_n = 4;
    a.est_n = 3;
    a.occlusion = true;
    rows.push_back(a);
    write_frame_metrics_csv(rows, dir / "frames.csv");
    const auto back = read_frame_metrics_csv(dir / "frames.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].ospa.total == a.ospa.total);  // bit-exact via %.17g
    CHECK(back[0].ospa.card == a.ospa.card);
    CHECK(back[0].variant == Variant::kImage);
    CHECK(back[0].occlusion);
    CHECK(!back[0].low_snr);
}

TEST_CASE("report aggregates equal recomputation from the persisted CSV") {
    HarnessConfig cfg = HarnessConfig::defaults();
    cfg.scenario.duration = 12;
    TempDir dir("glmbim_test_agg");
    const auto report = run_monte_carlo(cfg, 2, 5);
    write_frame_metrics_csv(report.rows, dir / "frames.csv");
    const auto back = read_frame_metrics_csv(dir / "frames.csv");
    for (Variant v : {Variant::kStandard, Variant::kImage}) {
        const auto expect = report.aggregates.at(variant_name(v));
        const auto got = aggregate_variant(back, v);
        CHECK(got.mean_ospa == expect.mean_ospa);  // bit-exact round trip
        CHECK(got.mean_ospa_flagged == expect.mean_ospa_flagged);
        CHECK(got.card_within_one == expect.card_within_one);
        CHECK(got.se_ospa == expect.se_ospa);
    }
}

TEST_CASE("a one-frame empty scenario scores zero OSPA for both variants") {
    HarnessConfig cfg = HarnessConfig::defaults();
    cfg.scenario.duration = 1;
    cfg.scenario.tracks.clear();
    const auto report = run_monte_carlo(cfg, 1, 3);
    REQUIRE(report.rows.size() == 2);
    for (const auto& r : report.rows) {
        CHECK(r.ospa.total == doctest::Approx(0.0));
        CHECK(r.truth_n == 0);
    }
}

TEST_CASE("monte carlo reruns are byte-identical") {
    HarnessConfig cfg = HarnessConfig::defaults();
    cfg.scenario.duration = 8;
    TempDir dir("glmbim_test_det");
    for (int pass = 0; pass < 2; ++pass) {
        const auto report = run_monte_carlo(cfg, 2, 7);
        write_frame_metrics_csv(report.rows, dir / ("frames" + std::to_string(pass) + ".csv"));
        write_report_json(report, cfg, dir / ("report" + std::to_string(pass) + ".json"));
    }
    CHECK(slurp(dir / "frames0.csv") == slurp(dir / "frames1.csv"));
    CHECK(slurp(dir / "report0.json") == slurp(dir / "report1.json"));
}

TEST_CASE("points CSV round trips") {
    TempDir dir("glmbim_test_pts");
    std::vector<std::vector<Vector2d>> frames = {{Vector2d(1.5, 2.5)}, {}, {Vector2d(3, 4), Vector2d(5, 6)}};
    write_points_csv(frames, {{7}}, dir / "pts.csv");
    const auto back = read_points_csv(dir / "pts.csv", 2, 3);
    REQUIRE(back.count(0) == 1);
    CHECK(back.count(1) == 0);
    REQUIRE(back.at(2).size() == 2);
    CHECK(back.at(0)[0](0) == doctest::Approx(1.5));
    CHECK(back.at(2)[1](1) == doctest::Approx(6.0));
}

TEST_CASE("frame stream round trips losslessly") {
    TempDir dir("glmbim_test_bin");
    TruthScenario sc;
    sc.width = 24;
    sc.height = 16;
    Rng rng(3);
    std::vector<ImageGrid> frames = {render_image({}, sc, 0, rng), render_image({}, sc, 1, rng)};
    write_frames_bin(frames, dir / "frames.bin");
    const auto back = read_frames_bin(dir / "frames.bin");
    REQUIRE(back.size() == 2);
    CHECK(back[0].width == 24);
    CHECK(back[0].v == frames[0].v);
    CHECK(back[1].v == frames[1].v);
}

TEST_CASE("track_sequence emits per-frame estimates and snapshots") {
    HarnessConfig cfg = HarnessConfig::defaults();
    cfg.scenario.duration = 6;
    const auto truth = generate_truth(cfg.scenario, 1);
    Rng rng(2);
    std::vector<HybridObservation> frames;
    for (int k = 0; k < cfg.scenario.duration; ++k)
        frames.push_back(observe(truth[static_cast<size_t>(k)], cfg.scenario, k, rng));
    const auto out = track_sequence(frames, variant_model(cfg, Variant::kImage), cfg.filter, 5);
    CHECK(out.per_frame.size() == 6);
    CHECK(out.snapshots.size() == 6);
    CHECK(out.snapshots[3].find("\"frame\":3") != std::string::npos);

    TempDir dir("glmbim_test_tracks");
    write_tracks_csv(out, 0, Variant::kImage, dir / "tracks.csv");
    const auto text = slurp(dir / "tracks.csv");
    CHECK(text.find("frame,run,variant,label_birth_time,label_index,x,y,exist_prob") == 0);
}

TEST_CASE("oracle battery stays within the truncation tolerance") {
    const auto res = oracle_check_battery(8, 8000, 12345);
    CHECK(res.max_l1 <= 0.05);
    CHECK(res.min_coverage >= 0.99);
}
