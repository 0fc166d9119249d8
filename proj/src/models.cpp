#include "glmbim/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glmbim {

Matrix4d MotionModel::F() const {
    Matrix4d f = Matrix4d::Identity();
    f(0, 1) = ts;
    f(2, 3) = ts;
    return f;
}

Matrix4d MotionModel::Q() const {
    // White-noise acceleration: Q = sigma_v^2 B B^T, B = I2 (x) [ts^2/2; ts].
    const double t2 = ts * ts;
    Eigen::Matrix2d blk;
    blk << t2 * t2 / 4.0, t2 * ts / 2.0, t2 * ts / 2.0, t2;
    Matrix4d q = Matrix4d::Zero();
    q.block<2, 2>(0, 0) = blk;
    q.block<2, 2>(2, 2) = blk;
    q *= sigma_v * sigma_v;
    q += 1e-9 * Matrix4d::Identity();  // PSD -> SPD jitter
    return q;
}

double SceneMask::at(double x, double y) const {
    const int ix = static_cast<int>(std::lround(x));
    const int iy = static_cast<int>(std::lround(y));
    if (ix < 0 || iy < 0 || ix >= width || iy >= height) return 0.0;
    return v[static_cast<size_t>(iy) * width + ix];
}

SceneMask SceneMask::border_margin(int width, int height, int margin) {
    // Linear ramp from 0 on the outermost rows to 1 at `margin` cells in; a
    // hard-zero band would make objects born on the scene edge unable to
    // survive their first transition.
    SceneMask m;
    m.width = width;
    m.height = height;
    m.v.assign(static_cast<size_t>(width) * height, 0.0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int d = std::min(std::min(x, width - 1 - x), std::min(y, height - 1 - y));
            m.v[static_cast<size_t>(y) * width + x] =
                margin > 0 ? std::min(1.0, static_cast<double>(d) / margin) : 1.0;
        }
    return m;
}

SceneMask SceneMask::from_pgm(const std::string& path) {
    const ImageGrid img = read_pgm_normalized(path);
    SceneMask m;
    m.width = img.width;
    m.height = img.height;
    m.v = img.v;
    return m;
}

double survival_probability(const LabeledGaussianTrack& track, int frame, const SurvivalModel& survival) {
    if (!survival.age_dependent) return survival.constant_ps;
    const int age = frame - track.label.birth_time;
    const double sig = 1.0 / (1.0 + std::exp(-survival.gamma * age));
    if (!survival.sigma_point_integration)
        return survival.mask.at(track.density.mean(0), track.density.mean(2)) * sig;

    // <p, b> by sigma points over the positional marginal.
    Eigen::Matrix2d pos_cov;
    pos_cov << track.density.cov(0, 0), track.density.cov(0, 2), track.density.cov(2, 0), track.density.cov(2, 2);
    Eigen::LLT<Eigen::Matrix2d> llt(pos_cov);
    const Eigen::Matrix2d S = llt.matrixL();
    const Vector2d mu(track.density.mean(0), track.density.mean(2));
    const double c = std::sqrt(2.0);  // n=2, alpha=1, kappa=0
    double b = 0.0;
    for (int k = 0; k < 2; ++k) {
        b += 0.25 * survival.mask.at(mu(0) + c * S(0, k), mu(1) + c * S(1, k));
        b += 0.25 * survival.mask.at(mu(0) - c * S(0, k), mu(1) - c * S(1, k));
    }
    return b * sig;
}

double SensorModel::log_kappa() const {
    if (clutter_rate <= 0.0 || clutter_area <= 0.0)
        throw std::invalid_argument("sensor: clutter intensity must be positive");
    return std::log(clutter_rate / clutter_area);
}

FactorResult detection_snr(const Vector2d& z, const GaussianDensity& prior, const SensorModel& sensor) {
    auto [post, loglik] = kalman_update(prior, z, sensor.H, sensor.noise);
    return {loglik - sensor.log_kappa(), post};
}

double baseline_distance_sq(const Patch& templ, double noise_sigma) {
    const double bg_mean = 2.0 * noise_sigma * noise_sigma;   // E|w|^2, exponential pixel
    const double bg_var = bg_mean * bg_mean;                  // Var|w|^2
    double d0 = 0.0;
    const int n = templ.size * templ.size;
    for (int i = 0; i < n; ++i) {
        const double diff = (templ.valid[i] ? templ.v[i] : bg_mean) - bg_mean;
        d0 += diff * diff + bg_var;
    }
    return d0;
}

double image_snr_loglik(const Vector4d& state, const ImageGrid& image, const Patch& templ,
                        const SensorModel& sensor) {
    if (templ.all_zero()) throw std::invalid_argument("image_snr_loglik: degenerate (all-zero) template");
    const double x = std::clamp(state(0), 0.0, image.width - 1.0);
    const double y = std::clamp(state(2), 0.0, image.height - 1.0);
    const Patch obs = extract_patch(image, x, y, sensor.patch_size);
    const double d2 = patch_distance_sq(obs, templ);
    const double d0 = baseline_distance_sq(templ, sensor.noise_sigma);
    const double s2 = sensor.template_sigma * sensor.template_sigma;
    return (d0 - d2) / s2;
}

Patch nominal_object_template(const SensorModel& sensor) {
    const double sn2 = sensor.noise_sigma * sensor.noise_sigma;
    const double amp2 = 2.0 * sn2 * std::pow(10.0, sensor.assumed_snr_db / 10.0);
    Patch p(sensor.patch_size);
    const int r = sensor.patch_size / 2;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double h = std::exp(-0.5 * (dx * dx + dy * dy));  // R = S = 1
            p.v[static_cast<size_t>(dy + r) * sensor.patch_size + (dx + r)] = amp2 * h * h + 2.0 * sn2;
        }
    return p;
}

FactorResult hybrid_phi(int j, const GaussianDensity& predicted, const HybridObservation& obs,
                        const SensorModel& sensor, const Patch& templ, const UtConfig& ut,
                        const CovarianceCap& cap) {
    if (j < 0 || j > static_cast<int>(obs.detections.size()))
        throw std::invalid_argument("hybrid_phi: association index out of range");
    if (j >= 1) {
        if (sensor.pd <= 0.0) return {kLogFloor, predicted};
        FactorResult r = detection_snr(obs.detections[static_cast<size_t>(j - 1)], predicted, sensor);
        r.log_value += std::log(sensor.pd);
        return r;
    }
    // Mis-detection branch: scale by the image SNR integrated over the prior.
    if (sensor.pd >= 1.0) return {kLogFloor, predicted};
    const double log_qd = std::log(1.0 - sensor.pd);
    if (sensor.image_factor_flat) return {log_qd, predicted};
    auto [post, log_integral] = unscented_update(
        predicted,
        [&](const Vector4d& x) { return image_snr_loglik(x, obs.image, templ, sensor); }, ut, cap);
    return {log_qd + log_integral, post};
}

std::vector<BirthCandidate> birth_components(int frame, const std::optional<HybridObservation>& prev_obs,
                                             const std::vector<double>& prev_assoc_weight,
                                             const BirthModel& birth, const SensorModel& sensor) {
    std::vector<BirthCandidate> out;
    int index = 0;
    auto template_at = [&](const Vector4d& mean) {
        if (prev_obs && prev_obs->image.width > 0 &&
            prev_obs->image.inside(mean(0), mean(2)))
            return extract_patch(prev_obs->image, mean(0), mean(2), sensor.patch_size);
        return nominal_object_template(sensor);
    };
    for (const auto& spec : birth.statics) {
        LabeledGaussianTrack t({frame, index++}, {spec.mean, spec.cov}, template_at(spec.mean));
        out.push_back({std::move(t), spec.r});
    }
    if (birth.adaptive_enabled && prev_obs) {
        constexpr double kMinSeparation = 3.0;  // one candidate per local cluster of weak detections
        for (size_t m = 0; m < prev_obs->detections.size(); ++m) {
            const double w = m < prev_assoc_weight.size() ? prev_assoc_weight[m] : 0.0;
            if (w >= birth.weak_assoc_threshold) continue;
            Vector4d mean;
            mean << prev_obs->detections[m](0), 0.0, prev_obs->detections[m](1), 0.0;
            bool duplicate = false;
            for (const auto& existing : out) {
                const double dx = existing.track.density.mean(0) - mean(0);
                const double dy = existing.track.density.mean(2) - mean(2);
                if (dx * dx + dy * dy < kMinSeparation * kMinSeparation) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;
            LabeledGaussianTrack t({frame, index++}, {mean, birth.adaptive_cov}, template_at(mean));
            out.push_back({std::move(t), birth.adaptive_r});
        }
    }
    return out;
}

Patch update_reference_template(const Patch& templ, const ImageGrid& image, const Vector4d& state,
                                bool confidently_detected, double alpha) {
    if (!confidently_detected) return templ;
    const double x = std::clamp(state(0), 0.0, image.width - 1.0);
    const double y = std::clamp(state(2), 0.0, image.height - 1.0);
    const Patch obs = extract_patch(image, x, y, templ.size);
    Patch out = templ;
    for (size_t i = 0; i < out.v.size(); ++i)
        if (obs.valid[i]) out.v[i] = (1.0 - alpha) * templ.v[i] + alpha * obs.v[i];
    return out;
}

}  // namespace glmbim
