#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "glmbim/filter.hpp"
#include "glmbim/models.hpp"
#include "glmbim/ospa.hpp"
#include "glmbim/simulator.hpp"

namespace glmbim {

// Everything the harness needs for one experiment: the simulated scenario,
// the tracker's models, filter/OSPA parameters and Monte Carlo settings.
// Defaults reproduce the desk-scale 5-track, 100-frame, 100x100 setup.
struct HarnessConfig {
    TruthScenario scenario;
    ScenarioModel model;
    FilterParams filter;
    OspaParams ospa;
    int mc_runs = 20;
    double occlusion_distance = 5.0;  // frames with a closer truth pair are flagged
    std::uint64_t seed = 1;
    std::string mask_pgm;  // optional scene-mask override

    static HarnessConfig defaults();
    static HarnessConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static HarnessConfig load(const std::string& path);
    void save(const std::string& path) const;
};

enum class Variant { kStandard, kImage };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

// The two compared trackers differ only in the image factor and the survival
// model: standard GLMB forces sigma_T == 1 and a constant P_S; the image
// variant uses the hybrid likelihood and age-dependent survival.
ScenarioModel variant_model(const HarnessConfig& cfg, Variant v);

}  // namespace glmbim
