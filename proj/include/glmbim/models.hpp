#pragma once

#include <optional>
#include <string>
#include <vector>

#include "glmbim/gaussian.hpp"
#include "glmbim/image.hpp"
#include "glmbim/observation.hpp"
#include "glmbim/rfs.hpp"

namespace glmbim {

// Constant-velocity motion, F = I2 (x) [1 Ts; 0 1], Q from white noise
// acceleration with strength sigma_v.
struct MotionModel {
    double ts = 1.0;
    double sigma_v = 1.0;

    Matrix4d F() const;
    Matrix4d Q() const;
};

// Rasterized scene mask b(x) in [0,1]; near-zero at exits, near-one mid-scene.
struct SceneMask {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    double at(double x, double y) const;  // nearest cell, 0 outside
    static SceneMask border_margin(int width, int height, int margin);
    static SceneMask from_pgm(const std::string& path);
};

struct SurvivalModel {
    SceneMask mask;
    double gamma = 0.1;           // sigmoid rate per frame
    bool age_dependent = true;    // false: constant_ps everywhere (standard GLMB variant)
    double constant_ps = 0.98;
    bool sigma_point_integration = false;  // <p, P_S> by sigma points instead of the mean point
};

struct BirthComponentSpec {
    double r = 0.03;
    Vector4d mean = Vector4d::Zero();
    Matrix4d cov = Matrix4d::Identity();
};

struct BirthModel {
    std::vector<BirthComponentSpec> statics;
    bool adaptive_enabled = false;
    double adaptive_r = 0.03;
    Matrix4d adaptive_cov = Matrix4d::Identity();
    double weak_assoc_threshold = 0.5;
};

struct SensorModel {
    double pd = 0.98;
    double clutter_rate = 10.0;      // expected clutter points per frame
    double clutter_area = 1e4;       // pixels^2, kappa = clutter_rate / clutter_area
    ObsMatrix H = (ObsMatrix() << 1, 0, 0, 0, 0, 0, 1, 0).finished();
    Matrix2d noise = (Matrix2d() << 16, 0, 0, 16).finished();
    double template_sigma = 10.0;    // sigma of the template likelihood
    int patch_size = 3;
    double noise_sigma = 1.0;        // simulator per-component complex noise std (baseline model)
    double assumed_snr_db = 10.0;    // SNR the tracker's template model is instantiated at
    bool image_factor_flat = false;  // force sigma_T == 1 (standard GLMB variant)

    double log_kappa() const;
};

struct ScenarioModel {
    MotionModel motion;
    BirthModel birth;
    SurvivalModel survival;
    SensorModel sensor;
    CovarianceCap cap = CovarianceCap::positional(100.0, 100.0);
    UtConfig ut;
};

// Age- and position-dependent survival probability
//   P_S(x, l) = b(x) / (1 + exp(-gamma (k - birth_time)))
// evaluated at the track mean (or sigma points when configured).
double survival_probability(const LabeledGaussianTrack& track, int frame, const SurvivalModel& survival);

struct FactorResult {
    double log_value = kLogFloor;  // log of the prior-integrated factor
    GaussianDensity posterior;
};

// log <p, g_D(z|.)> - log kappa(z), plus the detection-updated density.
FactorResult detection_snr(const Vector2d& z, const GaussianDensity& prior, const SensorModel& sensor);

// log sigma_T at one state: template likelihood ratio on the local patch,
//   (d0^2 - ||f(x) - templ||^2) / template_sigma^2
// where d0^2 is the expected squared distance between the template and a
// pure-noise patch under the simulator's noise model (so sigma_T ~ 1 on
// background). Throws on an all-zero template.
double image_snr_loglik(const Vector4d& state, const ImageGrid& image, const Patch& templ,
                        const SensorModel& sensor);

// Closed-form d0^2 for a template: sum_i [(f_i - 2 sn^2)^2 + 4 sn^4].
double baseline_distance_sq(const Patch& templ, double noise_sigma);

// Expected appearance of an object at the model's assumed SNR (used to seed
// templates when no image is available).
Patch nominal_object_template(const SensorModel& sensor);

// Per-association factor phi (integrated over the predicted prior) and the
// updated density: j >= 1 pairs the track with detection z_j, j = 0 is the
// mis-detection branch updated against the local image.
FactorResult hybrid_phi(int j, const GaussianDensity& predicted, const HybridObservation& obs,
                        const SensorModel& sensor, const Patch& templ, const UtConfig& ut,
                        const CovarianceCap& cap);

struct BirthCandidate {
    LabeledGaussianTrack track;
    double r = 0.03;
};

// Static births (always) plus, when enabled, one component per previous-frame
// detection whose max association weight fell below the threshold. Templates
// come from the previous image patch at the birth mean, or the nominal object
// template when no image is available.
std::vector<BirthCandidate> birth_components(int frame, const std::optional<HybridObservation>& prev_obs,
                                             const std::vector<double>& prev_assoc_weight,
                                             const BirthModel& birth, const SensorModel& sensor);

// Exponential moving average toward the observed patch when the track was
// confidently detected; identity otherwise.
Patch update_reference_template(const Patch& templ, const ImageGrid& image, const Vector4d& state,
                                bool confidently_detected, double alpha = 0.1);

}  // namespace glmbim
