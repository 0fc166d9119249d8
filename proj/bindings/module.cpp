#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "glmbim/config.hpp"
#include "glmbim/harness.hpp"

namespace py = pybind11;
using namespace glmbim;

namespace {

std::vector<Vector2d> to_points(const py::array_t<double>& arr) {
    const auto buf = arr.unchecked<2>();
    if (buf.shape(1) != 2) throw std::invalid_argument("expected an (n, 2) array");
    std::vector<Vector2d> pts(static_cast<size_t>(buf.shape(0)));
    for (py::ssize_t i = 0; i < buf.shape(0); ++i) pts[static_cast<size_t>(i)] = Vector2d(buf(i, 0), buf(i, 1));
    return pts;
}

HarnessConfig config_from(const std::string& config_json) {
    if (config_json.empty()) return HarnessConfig::defaults();
    return HarnessConfig::from_json(nlohmann::json::parse(config_json));
}

}  // namespace

PYBIND11_MODULE(_glmbim, m) {
    m.doc() = "GLMB multi-object tracker with hybrid detection/image updates";

    m.def(
        "ospa",
        [](const py::array_t<double>& est, const py::array_t<double>& truth, double c, double p) {
            const auto r = ospa(to_points(est), to_points(truth), OspaParams{c, p});
            return py::make_tuple(r.total, r.loc, r.card);
        },
        py::arg("estimated"), py::arg("truth"), py::arg("cutoff_c") = 20.0, py::arg("order_p") = 1.0,
        "OSPA distance (total, localization, cardinality) between two (n, 2) point sets");

    m.def(
        "simulate",
        [](const std::string& config_json, std::uint64_t seed) {
            HarnessConfig cfg = config_from(config_json);
            if (seed) cfg.seed = seed;
            const auto truth = generate_truth(cfg.scenario, derive_seed(cfg.seed, {0x7472757468ULL}));
            Rng rng = make_rng(cfg.seed, {0x72656e646572ULL, 0});
            py::array_t<double> frames({cfg.scenario.duration, cfg.scenario.height, cfg.scenario.width});
            auto out = frames.mutable_unchecked<3>();
            py::list truth_list;
            for (int k = 0; k < cfg.scenario.duration; ++k) {
                const auto img = render_image(truth[static_cast<size_t>(k)], cfg.scenario, k, rng);
                for (int y = 0; y < img.height; ++y)
                    for (int x = 0; x < img.width; ++x) out(k, y, x) = img.at(x, y);
                py::list pts;
                for (const auto& s : truth[static_cast<size_t>(k)])
                    pts.append(py::make_tuple(s.id, s.x(0), s.x(2)));
                truth_list.append(pts);
            }
            return py::make_tuple(frames, truth_list);
        },
        py::arg("config_json") = "", py::arg("seed") = 0,
        "Render a scenario; returns (frames [T,H,W], per-frame truth [(id, x, y), ...])");

    m.def(
        "detect",
        [](const py::array_t<double>& frame, double threshold) {
            const auto buf = frame.unchecked<2>();
            ImageGrid img(static_cast<int>(buf.shape(1)), static_cast<int>(buf.shape(0)));
            for (py::ssize_t y = 0; y < buf.shape(0); ++y)
                for (py::ssize_t x = 0; x < buf.shape(1); ++x)
                    img.at(static_cast<int>(x), static_cast<int>(y)) = buf(y, x);
            py::list out;
            for (const auto& z : detect(img, threshold)) out.append(py::make_tuple(z(0), z(1)));
            return out;
        },
        py::arg("frame"), py::arg("threshold"),
        "Hard-threshold point detector; returns cluster centroids [(x, y), ...]");

    m.def(
        "track",
        [](const std::string& config_json, const std::string& variant, std::uint64_t seed) {
            HarnessConfig cfg = config_from(config_json);
            if (seed) cfg.seed = seed;
            const Variant v = parse_variant(variant);
            const auto truth = generate_truth(cfg.scenario, derive_seed(cfg.seed, {0x7472757468ULL}));
            Rng rng = make_rng(cfg.seed, {0x72656e646572ULL, 0});
            std::vector<HybridObservation> frames(static_cast<size_t>(cfg.scenario.duration));
            for (int k = 0; k < cfg.scenario.duration; ++k)
                frames[static_cast<size_t>(k)] = observe(truth[static_cast<size_t>(k)], cfg.scenario, k, rng);
            const auto out = track_sequence(frames, variant_model(cfg, v), cfg.filter,
                                            derive_seed(cfg.seed, {0x66696c746572ULL, 0, v == Variant::kImage}));
            py::list per_frame;
            for (const auto& ests : out.per_frame) {
                py::list le;
                for (const auto& e : ests)
                    le.append(py::make_tuple(py::make_tuple(e.label.birth_time, e.label.birth_index),
                                             e.state(0), e.state(2), e.existence));
                per_frame.append(le);
            }
            return per_frame;
        },
        py::arg("config_json") = "", py::arg("variant") = "glmb-im", py::arg("seed") = 0,
        "Simulate the configured scenario and track it; returns per-frame [((t,i), x, y, r), ...]");

    m.def(
        "monte_carlo",
        [](const std::string& config_json, int runs, std::uint64_t seed) {
            HarnessConfig cfg = config_from(config_json);
            if (seed) cfg.seed = seed;
            if (runs > 0) cfg.mc_runs = runs;
            const auto report = run_monte_carlo(cfg, cfg.mc_runs, cfg.seed);
            py::dict d;
            for (const auto& [name, agg] : report.aggregates) {
                py::dict a;
                a["mean_ospa"] = agg.mean_ospa;
                a["mean_loc"] = agg.mean_loc;
                a["mean_card"] = agg.mean_card;
                a["se_ospa"] = agg.se_ospa;
                a["mean_ospa_flagged"] = agg.mean_ospa_flagged;
                a["card_within_one"] = agg.card_within_one;
                d[py::str(name)] = a;
            }
            return d;
        },
        py::arg("config_json") = "", py::arg("runs") = 0, py::arg("seed") = 0,
        "Paired Monte Carlo comparison; returns aggregate metrics per variant");

    m.def("default_config", [] { return HarnessConfig::defaults().to_json().dump(2); },
          "The built-in desk-scale scenario/config as JSON");
}
