#include "glmbim/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace glmbim {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

Matrix4d symmetrize(const Matrix4d& m) { return 0.5 * (m + m.transpose()); }
}  // namespace

bool is_spd(const Matrix4d& m, double sym_tol) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, m.cwiseAbs().maxCoeff()))
        return false;
    Eigen::LLT<Matrix4d> llt(symmetrize(m));
    return llt.info() == Eigen::Success;
}

Matrix4d cap_covariance(const Matrix4d& cov, const CovarianceCap& cap) {
    Vector4d scale;
    bool hit = false;
    for (int i = 0; i < 4; ++i) {
        if (cov(i, i) > cap.max_var(i)) {
            scale(i) = std::sqrt(cap.max_var(i) / cov(i, i));
            hit = true;
        } else {
            scale(i) = 1.0;
        }
    }
    if (!hit) return cov;
    return symmetrize(scale.asDiagonal() * cov * scale.asDiagonal());
}

GaussianDensity predict(const GaussianDensity& prior, const Matrix4d& F, const Matrix4d& Q,
                        const CovarianceCap& cap) {
    GaussianDensity out;
    out.mean = F * prior.mean;
    out.cov = cap_covariance(symmetrize(F * prior.cov * F.transpose() + Q), cap);
    if (!is_spd(out.cov)) throw std::runtime_error("predict: covariance not SPD");
    return out;
}

double log_gaussian2(const Vector2d& x, const Vector2d& mean, const Matrix2d& cov) {
    Eigen::LLT<Matrix2d> llt(cov);
    if (llt.info() != Eigen::Success) throw std::runtime_error("log_gaussian2: singular covariance");
    const Vector2d nu = x - mean;
    const Vector2d w = llt.matrixL().solve(nu);
    const double log_det = 2.0 * std::log(llt.matrixL()(0, 0) * llt.matrixL()(1, 1));
    return -0.5 * (2.0 * kLog2Pi + log_det + w.squaredNorm());
}

std::pair<GaussianDensity, double> kalman_update(const GaussianDensity& prior, const Vector2d& z,
                                                 const ObsMatrix& H, const Matrix2d& noise) {
    const Matrix2d S = H * prior.cov * H.transpose() + noise;
    Eigen::LLT<Matrix2d> llt(S);
    if (llt.info() != Eigen::Success) throw std::runtime_error("kalman_update: singular innovation covariance");

    const double loglik = log_gaussian2(z, H * prior.mean, S);

    const Eigen::Matrix<double, 4, 2> K = llt.solve(H * prior.cov).transpose();
    GaussianDensity post;
    post.mean = prior.mean + K * (z - H * prior.mean);
    const Matrix4d A = Matrix4d::Identity() - K * H;
    post.cov = symmetrize(A * prior.cov * A.transpose() + K * noise * K.transpose());
    return {post, loglik};
}

std::pair<GaussianDensity, double> unscented_update(const GaussianDensity& prior,
                                                    const std::function<double(const Vector4d&)>& loglik,
                                                    const UtConfig& cfg, const CovarianceCap& cap) {
    constexpr int n = 4;
    const double lambda = cfg.alpha * cfg.alpha * (n + cfg.kappa) - n;
    const double c = std::sqrt(n + lambda);
    const double w0 = lambda / (n + lambda);
    const double wi = 0.5 / (n + lambda);

    Eigen::LLT<Matrix4d> llt(prior.cov);
    if (llt.info() != Eigen::Success) throw std::runtime_error("unscented_update: prior covariance not SPD");
    const Matrix4d S = llt.matrixL();

    const double l0 = loglik(prior.mean);
    Eigen::Matrix<double, n, 1> lp, lm;
    for (int k = 0; k < n; ++k) {
        lp(k) = loglik(prior.mean + c * S.col(k));
        lm(k) = loglik(prior.mean - c * S.col(k));
    }

    // <p, g> by sigma-point quadrature (mean weights).
    double lmax = l0;
    for (int k = 0; k < n; ++k) lmax = std::max(lmax, std::max(lp(k), lm(k)));
    double log_integral;
    if (!std::isfinite(lmax) || lmax <= kLogFloor) {
        return {prior, kLogFloor};
    } else {
        double acc = w0 > 0.0 ? w0 * std::exp(l0 - lmax) : 0.0;
        for (int k = 0; k < n; ++k) acc += wi * (std::exp(lp(k) - lmax) + std::exp(lm(k) - lmax));
        log_integral = lmax + std::log(acc);
        if (log_integral < kLogFloor) return {prior, kLogFloor};
    }

    // Axial quadratic fit in whitened coordinates u (x = mean + S u):
    //   loglik ~ l0 + sum_k b_k u_k - 0.5 a_k u_k^2
    // Prior is N(0, I) in u, so per axis: precision 1 + a_k, mean b_k/(1+a_k).
    // The fit is only trusted inside the sigma-point span: variance may grow
    // at most 4x per axis and the mean shift is capped at the point spread c.
    Vector4d inv_prec, u_star;
    for (int k = 0; k < n; ++k) {
        const double b = (lp(k) - lm(k)) / (2.0 * c);
        const double a = (2.0 * l0 - lp(k) - lm(k)) / (c * c);
        inv_prec(k) = std::min(1.0 / std::max(1.0 + a, 0.25), 4.0);
        u_star(k) = std::clamp(b / std::max(1.0 + a, 0.25), -c, c);
    }

    GaussianDensity post;
    post.mean = prior.mean + S * u_star;
    post.cov = cap_covariance(symmetrize(S * inv_prec.asDiagonal() * S.transpose()), cap);
    return {post, log_integral};
}

}  // namespace glmbim
