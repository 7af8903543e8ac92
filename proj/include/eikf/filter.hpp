#pragma once

#include "eikf/gaussian.hpp"
#include "eikf/sensors.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eikf {

enum class FilterVariant { EKF, IEKF, InEKF, EIKF_I, EIKF_C };

std::string to_string(FilterVariant v);
/// Throws ConfigError for unknown names.
FilterVariant filter_variant_from_string(const std::string& name);

/// Weight on the prior term of the iteration cost.
enum class CostForm {
  Printed,  // delta^T J^-1 P J^-T delta
  Map,      // delta^T P^-1 delta
};

struct UpdateConfig {
  int l_max = 3;
  double tau = 1e-6;
  int N_threshold = 50;
  FilterVariant variant = FilterVariant::EIKF_C;
  CostForm cost = CostForm::Printed;
  /// EIKF measurement noise: use the configured sigma instead of sigma_hat.
  bool use_configured_sigma = false;
  /// Lower bound on the noise s.d. used in the gain.
  double sigma_floor = 1e-6;
};

enum class UpdatePath { None, Iterated, Eikf };

struct UpdateReport {
  int iterations_used = 0;
  double final_cost = 0.0;
  std::vector<double> costs;
  double gain_norm = 0.0;
  int features_used = 0;
  int features_dropped = 0;
  UpdatePath path = UpdatePath::None;
  double sigma_used = 0.0;
};

struct UpdateResult {
  BeliefState belief;
  UpdateReport report;
};

/// K = P Jinv^T H^T (H Jinv P Jinv^T H^T + Sigma)^-1.
MatX kalman_gain_covariance_form(const MatX& P, const MatX& Jinv, const MatX& H,
                                 const MatX& Sigma);
/// K = J F H^T Sigma^-1 with F = (J^T P^-1 J + H^T Sigma^-1 H)^-1.
MatX kalman_gain_information_form(const MatX& P, const MatX& J, const MatX& H, const MatX& Sigma);

/// One linearized step of the iterated update: increment = K (r + H delta) and
/// posterior = Jinv (I - K H Jinv) P Jinv^T, with Sigma = sigma2 I. Evaluated
/// through a QR factor of [H Jinv sqrt(P); sigma I], so S is never formed.
struct GainStep {
  Vec15 increment = Vec15::Zero();
  Mat15 posterior = Mat15::Zero();
  double gain_norm = 0.0;
};
GainStep gain_step(const Mat15& P, const Mat15& Jinv, const MatX& H15, const VecX& r,
                   double sigma2, const Vec15& delta);

/// Propagates over each sample interval; the last interval ends at t_end.
BeliefState predict(const BeliefState& belief, std::span<const ImuSample> window, double t_end,
                    const NoiseParams& params, const Vec3& gravity);

/// Iteration cost at mean mu with bias estimates (bias_g, bias_a).
double update_cost(const ExtendedPose& mu, const Vec3& bias_g, const Vec3& bias_a,
                   const BeliefState& prior, const MeasurementBatch& batch,
                   const SensorSetup& setup, CostForm form);
double update_cost(const ExtendedPose& mu, const BeliefState& prior,
                   const MeasurementBatch& batch, const SensorSetup& setup, CostForm form);

/// Iterated Lie-group Gauss-Newton update started at mu0.
UpdateResult iterated_update(const BeliefState& prior, const MeasurementBatch& batch,
                             const SensorSetup& setup, const UpdateConfig& cfg,
                             const ExtendedPose& mu0);

/// Single step linearized at the consistent pose with the prior velocity.
UpdateResult eikf_update(const BeliefState& prior, const MeasurementBatch& batch,
                         const SensorSetup& setup, const UpdateConfig& cfg);

/// Chooses eikf_update when the batch has more than N features, otherwise the
/// iterated update from the prior mean. Empty batches leave the prior unchanged.
UpdateResult practical_eikf_update(const BeliefState& prior, const MeasurementBatch& batch,
                                   const SensorSetup& setup, const UpdateConfig& cfg);

/// Prediction followed by practical_eikf_update.
UpdateResult practical_eikf_step(const BeliefState& belief, std::span<const ImuSample> window,
                                 double t_end, const MeasurementBatch& batch,
                                 const SensorSetup& setup, const UpdateConfig& cfg,
                                 const NoiseParams& params, const Vec3& gravity);

/// Closed-form fusion of the prior with a pose measurement T_virtual carrying
/// information F (6x6, tangent order [theta; rho]).
BeliefState fused_map_with_virtual_pose(const BeliefState& belief, const Pose& T_virtual,
                                        const Mat6& F);

/// d xi / d (local error) at X, for local error [R-right theta; p; v].
Mat9 invariant_from_local_jacobian(const ExtendedPose& X);
/// Maps a covariance over [theta_body; p; v; bg; ba] into invariant coordinates.
Mat15 invariant_cov_from_local(const Mat15& local, const ExtendedPose& X);

struct FilterInit {
  ExtendedPose mean;
  Vec3 bias_g = Vec3::Zero();
  Vec3 bias_a = Vec3::Zero();
  Mat15 local_cov = Mat15::Identity();
};

/// One predict/update stream. Not thread-safe; distinct instances are independent.
class Filter {
 public:
  virtual ~Filter() = default;
  virtual void predict(std::span<const ImuSample> window, double t_end) = 0;
  virtual UpdateReport update(const MeasurementBatch& batch) = 0;
  virtual ExtendedPose estimate() const = 0;
  virtual Mat15 covariance() const = 0;
  virtual FilterVariant variant() const = 0;
};

std::unique_ptr<Filter> make_filter(FilterVariant variant, const FilterInit& init,
                                    const SensorSetup& setup, const UpdateConfig& cfg,
                                    const NoiseParams& params, const Vec3& gravity);

}  // namespace eikf
