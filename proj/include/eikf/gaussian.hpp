#pragma once

#include "eikf/lie.hpp"

namespace eikf {

/// Continuous-time IMU noise densities and sensor noise standard deviations.
struct NoiseParams {
  double sigma_g = 0.01;    // rad/s/sqrt(Hz)
  double sigma_a = 0.01;    // m/s^2/sqrt(Hz)
  double sigma_bg = 0.001;  // rad/s^2/sqrt(Hz)
  double sigma_ba = 0.001;  // m/s^3/sqrt(Hz)
  double sigma_camera = 1.0;  // pixels
  double sigma_lidar = 0.2;   // m
};

/// Right-concentrated Gaussian on SE2(3) plus bias means. The covariance is
/// over [xi(9); bias_g error(3); bias_a error(3)] with xi = log(X * mean^-1).
struct BeliefState {
  ExtendedPose mean;
  Vec3 bias_g = Vec3::Zero();
  Vec3 bias_a = Vec3::Zero();
  Mat15 cov = Mat15::Identity();
};

inline constexpr int kStateDim = 15;

/// <<A>> = -tr(A) I + A.
Mat3 bracket1(const Mat3& A);
/// <<A,B>> = <<A>><<B>> + <<BA>>.
Mat3 bracket2(const Mat3& A, const Mat3& B);

/// D = E[ad_xi^2] for xi ~ N(0, P).
Mat9 expected_ad_squared(const Mat9& P);
/// B = E[ad_xi Sigma ad_xi^T] for xi ~ N(0, P) independent of the noise.
Mat9 expected_ad_sigma_ad(const Mat9& Sigma, const Mat9& P);

/// Coefficient of ad^2 in the inverse left Jacobian series (B_2 / 2! = 1/12).
double dexp_inv_second_order_coefficient();

/// Covariance of (I - ad/2 + c ad^2) n' with n' ~ N(0, Sigma), xi ~ N(0, P),
/// dropping terms of fourth order in xi.
Mat9 sigma_fourth(const Mat9& Sigma_nprime, const Mat9& P_bar,
                  double second_order_coeff = dexp_inv_second_order_coefficient());
/// Dynamic-size entry point; throws DimensionMismatch unless both are 9x9.
MatX sigma_fourth(const MatX& Sigma_nprime, const MatX& P_bar);

Mat9 noise_sigma_nprime(const BeliefState& belief, const NoiseParams& params);

/// Drift matrix of the right-invariant error: d/dt xi = A xi. A^3 = 0.
Mat9 error_drift_matrix(const Vec3& gravity);
Mat9 state_transition(double dt, const Vec3& gravity);
/// Integral over [0, dt] of Phi(s) Sigma Phi(s)^T, evaluated in closed form.
Mat9 discrete_process_noise(double dt, const Mat9& Sigma_4th, const Vec3& gravity);

Mat15 propagate_covariance(const BeliefState& belief, double dt, const NoiseParams& params,
                           const Vec3& gravity);

template <typename M>
M symmetrized(const M& P) {
  return 0.5 * (P + P.transpose());
}

}  // namespace eikf
