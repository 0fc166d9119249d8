#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <utility>

namespace glmbim {

using Eigen::Matrix2d;
using Eigen::Matrix4d;
using Eigen::Vector2d;
using Eigen::Vector4d;
using ObsMatrix = Eigen::Matrix<double, 2, 4>;

constexpr double kLogFloor = -700.0;  // natural-log floor; exp underflows to 0 below this

// Single-track kinematic density N(mean, cov) on [px, vx, py, vy].
struct GaussianDensity {
    Vector4d mean = Vector4d::Zero();
    Matrix4d cov = Matrix4d::Identity();
};

// Unscented transform spread parameters. kappa must keep the center-point
// mean weight lambda/(n+lambda) positive for n = 4.
struct UtConfig {
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 2.0;
};

// Per-axis variance bounds; default unbounded.
struct CovarianceCap {
    Vector4d max_var = Vector4d::Constant(std::numeric_limits<double>::infinity());
    static CovarianceCap positional(double pos_var, double vel_var) {
        CovarianceCap c;
        c.max_var << pos_var, vel_var, pos_var, vel_var;
        return c;
    }
};

bool is_spd(const Matrix4d& m, double sym_tol = 1e-10);

// Shrink a covariance so no diagonal entry exceeds its per-axis bound.
// Symmetric congruence scaling: preserves SPD, never grows any eigenvalue.
Matrix4d cap_covariance(const Matrix4d& cov, const CovarianceCap& cap);

// mean' = F mean, cov' = F cov F^T + Q, then cap. Throws on a non-SPD result.
GaussianDensity predict(const GaussianDensity& prior, const Matrix4d& F, const Matrix4d& Q,
                        const CovarianceCap& cap = {});

// Linear-Gaussian update. Returns the posterior (Joseph form) and the log
// predictive likelihood log N(z; H mean, H cov H^T + noise).
std::pair<GaussianDensity, double> kalman_update(const GaussianDensity& prior, const Vector2d& z,
                                                 const ObsMatrix& H, const Matrix2d& noise);

// Measurement update against an arbitrary log-likelihood, evaluated at the
// 2n+1 sigma points of the prior.
//   log_integral = log sum_i w_i exp(loglik(chi_i))           (<p, g> estimate)
//   posterior    = prior x exp(quadratic fit of loglik along the whitened
//                  sigma-point axes), combined in closed form.
// The axial fit is exact for log-likelihoods quadratic along the prior's
// principal axes, so a Gaussian loglik reproduces kalman_update there.
// If every sigma-point weight underflows the result is (prior, kLogFloor).
std::pair<GaussianDensity, double> unscented_update(const GaussianDensity& prior,
                                                    const std::function<double(const Vector4d&)>& loglik,
                                                    const UtConfig& cfg = {},
                                                    const CovarianceCap& cap = {});

double log_gaussian2(const Vector2d& x, const Vector2d& mean, const Matrix2d& cov);

}  // namespace glmbim
