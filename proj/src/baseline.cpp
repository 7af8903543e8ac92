#include "eikf/baseline.hpp"

#include <cmath>

namespace eikf {

Vec15 eskf_local_error(const EskfState& reference, const ExtendedPose& X, const Vec3& bias_g,
                       const Vec3& bias_a) {
  const Mat3 dR = reference.mean.R.transpose() * X.R;
  if (rotation_angle(dR) > M_PI - 1e-6) {
    throw Error(ErrorCode::LogDomain, "rotation offset outside the log domain");
  }
  Vec15 d;
  d << so3_log(dR), X.p - reference.mean.p, X.v - reference.mean.v, bias_g - reference.bias_g,
      bias_a - reference.bias_a;
  return d;
}

EskfState eskf_predict(const EskfState& state, std::span<const ImuSample> window, double t_end,
                       const NoiseParams& params, const Vec3& gravity) {
  if (window.empty()) throw Error(ErrorCode::EmptyWindow, "empty IMU window");
  EskfState s = state;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double t_next = i + 1 < window.size() ? window[i + 1].t : t_end;
    const double dt = t_next - window[i].t;
    if (!(dt > 0.0)) throw Error(ErrorCode::NonMonotonicTime, "IMU timestamps must increase");
    const Vec3 w = window[i].omega_m - s.bias_g;
    const Vec3 a = window[i].a_m - s.bias_a;
    const Mat3& R = s.mean.R;
    const Mat3 Ra = R * skew(a);

    Mat15 F = Mat15::Identity();
    F.block<3, 3>(0, 0) = so3_exp(-w * dt);
    F.block<3, 3>(0, 9) = -Mat3::Identity() * dt;
    F.block<3, 3>(3, 0) = -0.5 * Ra * dt * dt;
    F.block<3, 3>(3, 6) = Mat3::Identity() * dt;
    F.block<3, 3>(3, 12) = -0.5 * R * dt * dt;
    F.block<3, 3>(6, 0) = -Ra * dt;
    F.block<3, 3>(6, 12) = -R * dt;

    Mat15 Q = Mat15::Zero();
    Q.block<3, 3>(0, 0) = params.sigma_g * params.sigma_g * dt * Mat3::Identity();
    Q.block<3, 3>(6, 6) = params.sigma_a * params.sigma_a * dt * Mat3::Identity();
    Q.block<3, 3>(9, 9) = params.sigma_bg * params.sigma_bg * dt * Mat3::Identity();
    Q.block<3, 3>(12, 12) = params.sigma_ba * params.sigma_ba * dt * Mat3::Identity();

    s.cov = symmetrized(Mat15(F * s.cov * F.transpose() + Q));
    s.mean = imu_mean_propagate(s.mean, s.bias_g, s.bias_a, window[i], dt, gravity);
  }
  return s;
}

MatX eskf_measurement_jacobian(const MatX& H_invariant, const ExtendedPose& X) {
  return H_invariant * invariant_from_local_jacobian(X);
}

EskfUpdateResult baseline_update(const EskfState& prior, const MeasurementBatch& batch,
                                 const SensorSetup& setup, const UpdateConfig& cfg) {
  if (cfg.l_max < 1) throw Error(ErrorCode::ConfigError, "l_max must be at least 1");
  if (batch_size(batch) == 0) throw Error(ErrorCode::EmptyBatch, "empty measurement batch");

  EskfUpdateResult res;
  res.report.path = UpdatePath::Iterated;
  EskfState cur = prior;
  GainStep step;
  for (int l = 0;; ++l) {
    const Vec15 delta = eskf_local_error(prior, cur.mean, cur.bias_g, cur.bias_a);
    const Linearization lin = linearize(batch, setup, cur.mean);
    if (lin.used == 0) throw Error(ErrorCode::EmptyBatch, "no visible features");
    const double sigma = std::max(lin.sigma, cfg.sigma_floor);

    MatX H = MatX::Zero(lin.H.rows(), 15);
    H.leftCols(9) = eskf_measurement_jacobian(lin.H, cur.mean);
    Mat15 Jinv = Mat15::Identity();
    // d(local error about the prior)/d(local error about cur) is J_r^-1 on rotation.
    Jinv.topLeftCorner<3, 3>() = so3_left_jacobian(-delta.head<3>());

    double c = 0.0;
    if (cfg.cost == CostForm::Printed) {
      const Vec15 w = Jinv.transpose() * delta;
      c = w.dot(prior.cov * w);
    } else {
      c = delta.dot(prior.cov.ldlt().solve(delta));
    }
    c += lin.r.squaredNorm() / (sigma * sigma);
    res.report.costs.push_back(c);
    res.report.final_cost = c;
    if (l > 0 && std::abs(c - res.report.costs[l - 1]) <= cfg.tau) break;

    step = gain_step(prior.cov, Jinv, H, lin.r, sigma * sigma, delta);
    const Vec15& x = step.increment;
    cur.mean.R = prior.mean.R * so3_exp(x.head<3>());
    cur.mean.p = prior.mean.p + x.segment<3>(3);
    cur.mean.v = prior.mean.v + x.segment<3>(6);
    cur.bias_g = prior.bias_g + x.segment<3>(9);
    cur.bias_a = prior.bias_a + x.tail<3>();
    res.report.iterations_used = l + 1;
    res.report.gain_norm = step.gain_norm;
    res.report.features_used = lin.used;
    res.report.features_dropped = lin.dropped;
    res.report.sigma_used = sigma;
    if (l + 1 == cfg.l_max) break;
  }
  cur.cov = step.posterior;
  res.state = cur;
  return res;
}

}  // namespace eikf
