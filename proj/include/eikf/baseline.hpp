#pragma once

#include "eikf/filter.hpp"

namespace eikf {

/// Error-state filter with R = R_hat Exp(dtheta) and additive p, v and biases.
/// The covariance is over [dtheta; dp; dv; dbg; dba].
struct EskfState {
  ExtendedPose mean;
  Vec3 bias_g = Vec3::Zero();
  Vec3 bias_a = Vec3::Zero();
  Mat15 cov = Mat15::Identity();
};

/// Local error of x relative to the reference (same ordering as the covariance).
Vec15 eskf_local_error(const EskfState& reference, const ExtendedPose& X, const Vec3& bias_g,
                       const Vec3& bias_a);

EskfState eskf_predict(const EskfState& state, std::span<const ImuSample> window, double t_end,
                       const NoiseParams& params, const Vec3& gravity);

/// Measurement Jacobian in local coordinates: H_invariant * d xi / d local.
MatX eskf_measurement_jacobian(const MatX& H_invariant, const ExtendedPose& X);

struct EskfUpdateResult {
  EskfState state;
  UpdateReport report;
};

/// Gauss-Newton iterations on the local parametrization; l_max = 1 is the EKF.
EskfUpdateResult baseline_update(const EskfState& prior, const MeasurementBatch& batch,
                                 const SensorSetup& setup, const UpdateConfig& cfg);

}  // namespace eikf
