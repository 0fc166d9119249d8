#pragma once

#include <map>
#include <string>
#include <vector>

#include "glmbim/config.hpp"
#include "glmbim/filter.hpp"
#include "glmbim/ospa.hpp"
#include "glmbim/simulator.hpp"

namespace glmbim {

// Round-trip-exact double formatting for persisted CSV/JSON, so aggregates
// recomputed from files match the in-memory values bit for bit.
std::string fmt_double(double v);

struct FrameMetrics {
    int run = 0;
    int frame = 0;
    Variant variant = Variant::kStandard;
    OspaResult ospa;
    int truth_n = 0;
    int est_n = 0;
    bool occlusion = false;  // some truth pair closer than occlusion_distance
    bool low_snr = false;    // some truth object in the low-SNR region
};

struct VariantAggregate {
    double mean_ospa = 0.0;
    double mean_loc = 0.0;
    double mean_card = 0.0;
    double se_ospa = 0.0;            // standard error over per-run frame means
    double mean_ospa_flagged = 0.0;  // over occlusion / low-SNR frames only
    double card_within_one = 0.0;    // fraction of frames with |est - truth| <= 1
};

struct RunReport {
    std::vector<FrameMetrics> rows;
    std::map<std::string, VariantAggregate> aggregates;  // keyed by variant name
    int runs = 0;
    std::vector<int> failed_runs;
};

// Paired Monte Carlo comparison: each run renders one frame sequence and
// feeds it to both variants. Deterministic given (cfg.seed, runs); runs
// execute in parallel and aggregate in run order. A run whose filter throws
// is excluded and reported.
RunReport run_monte_carlo(const HarnessConfig& cfg, int runs, std::uint64_t seed);

VariantAggregate aggregate_variant(const std::vector<FrameMetrics>& rows, Variant v);

// frames.csv persistence (one row per run/frame/variant) and the aggregate
// report; byte-stable for fixed inputs.
void write_frame_metrics_csv(const std::vector<FrameMetrics>& rows, const std::string& path);
std::vector<FrameMetrics> read_frame_metrics_csv(const std::string& path);
void write_report_json(const RunReport& report, const HarnessConfig& cfg, const std::string& path);

// Single tracking pass over prerecorded observations; returns per-frame
// estimates and writes optional CSV / JSONL snapshot streams.
struct TrackOutput {
    std::vector<std::vector<LabeledEstimate>> per_frame;
    std::vector<std::string> snapshots;  // one JSON object per frame
};
TrackOutput track_sequence(const std::vector<HybridObservation>& frames, const ScenarioModel& model,
                           const FilterParams& params, std::uint64_t seed);

void write_tracks_csv(const TrackOutput& out, int run, Variant v, const std::string& path);

// Point-set CSVs (frame,id,x,y); used for truth, detections and eval input.
void write_points_csv(const std::vector<std::vector<Vector2d>>& frames,
                      const std::vector<std::vector<int>>& ids, const std::string& path);
std::map<int, std::vector<Vector2d>> read_points_csv(const std::string& path, int x_col, int y_col);

// Raw frame stream IO (float64, small JSON header) for lossless replay;
// PGM dumps are for eyeballs only.
void write_frames_bin(const std::vector<ImageGrid>& frames, const std::string& path);
std::vector<ImageGrid> read_frames_bin(const std::string& path);

// Randomized small update instance (a few tracks and births, a handful of
// detections, a rendered image) sized for the exact enumeration oracle.
struct SmallInstance {
    GlmbDensity prior;
    HybridObservation obs;
    ScenarioModel model;
    std::vector<BirthCandidate> births;
};
SmallInstance make_small_instance(std::uint64_t seed, int max_tracks = 3, int n_births = 2,
                                  int max_detections = 4);

// Gibbs-truncated vs exact posteriors over a battery of small instances.
struct OracleCheckResult {
    int instances = 0;
    double max_l1 = 0.0;
    double min_coverage = 1.0;
};
OracleCheckResult oracle_check_battery(int instances, int trials, std::uint64_t seed);

}  // namespace glmbim
