#pragma once

#include "eikf/sensors.hpp"

#include <optional>

namespace eikf {

using Vec11 = Eigen::Matrix<double, 11, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

inline constexpr int kMinCameraFeatures = 6;
/// The LiDAR system has 12 unknowns, one row per point.
inline constexpr int kMinLidarPoints = 12;

/// Linear PnP system over x = alpha [r3; r1; p1; r2; p2], where r_i are the rows
/// of R_C^T and p = -R_C^T p_C. Pixels are centered on the principal point.
struct CameraLinearSystem {
  MatX A;  // 2n x 11
  VecX b;  // 2n
  MatX G;  // 2n x 11, d(row of A)/d(pixel noise)
  Vec3 p_bar_f = Vec3::Zero();
};

/// Point-to-plane system over x = [vec(R_L); p_L] (column stacking).
struct LidarLinearSystem {
  MatX A;  // n x 12
  VecX b;  // n
  Mat12 Q_bar = Mat12::Zero();
};

struct ConsistentPoseResult {
  Pose pose;  // sensor pose in the world frame
  double sigma_hat = 0.0;
  int n_used = 0;
};

/// How a 12-vector encodes a pose.
enum class PoseConvention {
  InverseRows,  // vec([R^T, -R^T p]), used by the camera system
  Direct,       // [vec(R); p], used by the LiDAR system
};

CameraLinearSystem build_camera_system(const std::vector<CameraFeature>& features,
                                       const LandmarkMap& landmarks, const CameraIntrinsics& K);

/// Smallest generalized eigenvalue of the pencil (M, N) with M positive
/// definite; returns 0 when M is numerically singular (noise-free data).
/// Throws SingularPencil when N carries no noise direction.
double smallest_pencil_eigenvalue(const MatX& M, const MatX& N);

/// sigma^2 estimate from the pencil ([A b]^T[A b]/n, [G g]^T[G g]/n).
double estimate_noise_variance(const MatX& A, const VecX& b, const MatX& G, const VecX& g);
double estimate_noise_variance(const CameraLinearSystem& sys);
double estimate_noise_variance(const LidarLinearSystem& sys);

/// (A^T A - s^2 G^T G)^-1 (A^T b - s^2 G^T 1). Throws IllConditioned.
Vec11 bias_eliminated_camera_solve(const CameraLinearSystem& sys, double sigma_hat);
/// Fixes alpha from det = 1 and positive mean depth; returns vec([R_C^T, -R_C^T p_C]).
Vec12 recover_scale_and_assemble(const Vec11& x, const CameraLinearSystem& sys);
Pose project_to_se3(const Vec12& x, PoseConvention convention);

LidarLinearSystem build_lidar_system(const std::vector<LidarPoint>& points);
/// (A^T A/n - s^2 Q_bar)^-1 A^T b/n, before projection.
Vec12 bias_eliminated_lidar_vector(const LidarLinearSystem& sys, double sigma_hat);
ConsistentPoseResult bias_eliminated_lidar_solve(const LidarLinearSystem& sys, double sigma_hat);

/// Full pipelines. When sigma is given it replaces the estimate.
ConsistentPoseResult camera_consistent_pose(const std::vector<CameraFeature>& features,
                                            const LandmarkMap& landmarks,
                                            const CameraIntrinsics& K,
                                            std::optional<double> sigma = std::nullopt);
ConsistentPoseResult lidar_consistent_pose(const std::vector<LidarPoint>& points,
                                           std::optional<double> sigma = std::nullopt);
ConsistentPoseResult consistent_pose(const MeasurementBatch& batch, const SensorSetup& setup,
                                     std::optional<double> sigma = std::nullopt);

}  // namespace eikf
