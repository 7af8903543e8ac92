#pragma once

#include "eikf/lie.hpp"

#include <cstddef>
#include <unordered_map>
#include <variant>
#include <vector>

namespace eikf {

struct ImuSample {
  Vec3 omega_m = Vec3::Zero();
  Vec3 a_m = Vec3::Zero();
  double t = 0.0;
};

struct CameraIntrinsics {
  double fx = 460.0;
  double fy = 460.0;
  double u0 = 320.0;
  double v0 = 240.0;
  int width = 640;
  int height = 480;
};

struct Landmark {
  int id = 0;
  Vec3 p_f = Vec3::Zero();
};

class LandmarkMap {
 public:
  LandmarkMap() = default;
  explicit LandmarkMap(const std::vector<Landmark>& landmarks);
  void add(int id, const Vec3& p_f) { points_[id] = p_f; }
  /// Throws MissingLandmark.
  const Vec3& at(int id) const;
  bool contains(int id) const { return points_.count(id) != 0; }
  std::size_t size() const { return points_.size(); }

 private:
  std::unordered_map<int, Vec3> points_;
};

struct CameraFeature {
  int landmark_id = 0;
  Vec2 z = Vec2::Zero();
};

/// A LiDAR point z (LiDAR frame) that lies on the world plane through q with
/// unit normal u.
struct LidarPoint {
  Vec3 z = Vec3::Zero();
  Vec3 u = Vec3::UnitZ();
  Vec3 q = Vec3::Zero();
};

/// Sensor poses in the IMU frame.
struct Extrinsics {
  Pose T_IC;
  Pose T_IL;
};

struct CameraBatch {
  std::vector<CameraFeature> features;
};

struct LidarBatch {
  std::vector<LidarPoint> points;
};

using MeasurementBatch = std::variant<CameraBatch, LidarBatch>;

std::size_t batch_size(const MeasurementBatch& batch);
bool is_camera(const MeasurementBatch& batch);

/// Everything an update needs to evaluate residuals besides the batch itself.
struct SensorSetup {
  CameraIntrinsics intrinsics;
  Extrinsics extrinsics;
  const LandmarkMap* landmarks = nullptr;
  double sigma_camera = 1.0;
  double sigma_lidar = 0.2;
};

/// Euler step on rotation with second-order translation.
ExtendedPose imu_mean_propagate(const ExtendedPose& X, const Vec3& bias_g, const Vec3& bias_a,
                                const ImuSample& sample, double dt, const Vec3& gravity);

/// Minimum depth accepted by project().
inline constexpr double kMinDepth = 1e-6;

/// Pinhole projection including the principal point. Throws BehindCamera.
Vec2 project(const CameraIntrinsics& K, const Vec3& p_cam);

/// Point expressed in the camera frame of IMU pose T.
Vec3 world_to_camera(const Pose& T, const Extrinsics& ext, const Vec3& p_world);

/// Stacked [u; v] residuals z - h(T). Throws BehindCamera or MissingLandmark.
VecX camera_residual(const Pose& T, const Extrinsics& ext, const CameraIntrinsics& K,
                     const std::vector<CameraFeature>& features, const LandmarkMap& landmarks);
/// u^T (R_L z + p_L - q) per point.
VecX lidar_residual(const Pose& T, const Extrinsics& ext, const std::vector<LidarPoint>& points);

/// H = -d r / d xi under the left perturbation exp(xi) X. Velocity columns are zero.
MatX camera_jacobian(const ExtendedPose& X, const Extrinsics& ext, const CameraIntrinsics& K,
                     const std::vector<CameraFeature>& features, const LandmarkMap& landmarks);
MatX lidar_jacobian(const ExtendedPose& X, const Extrinsics& ext,
                    const std::vector<LidarPoint>& points);

/// Residual and Jacobian at one linearization point. Camera features behind
/// the camera are skipped and counted in `dropped`.
struct Linearization {
  VecX r;
  MatX H;
  int used = 0;
  int dropped = 0;
  double sigma = 1.0;
};

Linearization linearize(const MeasurementBatch& batch, const SensorSetup& setup,
                        const ExtendedPose& X);

}  // namespace eikf
