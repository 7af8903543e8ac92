#include "eikf/sensors.hpp"

#include <string>

namespace eikf {

LandmarkMap::LandmarkMap(const std::vector<Landmark>& landmarks) {
  points_.reserve(landmarks.size());
  for (const auto& l : landmarks) points_[l.id] = l.p_f;
}

const Vec3& LandmarkMap::at(int id) const {
  auto it = points_.find(id);
  if (it == points_.end()) {
    throw Error(ErrorCode::MissingLandmark, "landmark " + std::to_string(id) + " not in map");
  }
  return it->second;
}

std::size_t batch_size(const MeasurementBatch& batch) {
  if (const auto* c = std::get_if<CameraBatch>(&batch)) return c->features.size();
  return std::get<LidarBatch>(batch).points.size();
}

bool is_camera(const MeasurementBatch& batch) {
  return std::holds_alternative<CameraBatch>(batch);
}

ExtendedPose imu_mean_propagate(const ExtendedPose& X, const Vec3& bias_g, const Vec3& bias_a,
                                const ImuSample& sample, double dt, const Vec3& gravity) {
  const Vec3 acc = X.R * (sample.a_m - bias_a) + gravity;
  ExtendedPose out;
  out.R = X.R * so3_exp((sample.omega_m - bias_g) * dt);
  out.v = X.v + acc * dt;
  out.p = X.p + X.v * dt + 0.5 * acc * dt * dt;
  return out;
}

Vec2 project(const CameraIntrinsics& K, const Vec3& c) {
  if (c.z() <= kMinDepth) throw Error(ErrorCode::BehindCamera, "point behind camera");
  return {K.fx * c.x() / c.z() + K.u0, K.fy * c.y() / c.z() + K.v0};
}

Vec3 world_to_camera(const Pose& T, const Extrinsics& ext, const Vec3& p_world) {
  const Pose T_C = T * ext.T_IC;
  return T_C.R.transpose() * (p_world - T_C.p);
}

VecX camera_residual(const Pose& T, const Extrinsics& ext, const CameraIntrinsics& K,
                     const std::vector<CameraFeature>& features, const LandmarkMap& landmarks) {
  const Pose T_C = T * ext.T_IC;
  const Mat3 RCt = T_C.R.transpose();
  VecX r(2 * features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vec3 c = RCt * (landmarks.at(features[i].landmark_id) - T_C.p);
    r.segment<2>(2 * i) = features[i].z - project(K, c);
  }
  return r;
}

VecX lidar_residual(const Pose& T, const Extrinsics& ext, const std::vector<LidarPoint>& points) {
  const Pose T_L = T * ext.T_IL;
  VecX r(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    const auto& pt = points[j];
    r(j) = pt.u.dot(T_L.act(pt.z) - pt.q);
  }
  return r;
}

namespace {

Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraIntrinsics& K, const Vec3& c) {
  const double iz = 1.0 / c.z();
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * iz, 0.0, -K.fx * c.x() * iz * iz,
       0.0, K.fy * iz, -K.fy * c.y() * iz * iz;
  return J;
}

// 2x9 block for one landmark; c is the landmark in the camera frame.
Eigen::Matrix<double, 2, 9> camera_row(const CameraIntrinsics& K, const Mat3& RCt,
                                       const Vec3& p_f, const Vec3& c) {
  Eigen::Matrix<double, 3, 9> dc = Eigen::Matrix<double, 3, 9>::Zero();
  dc.block<3, 3>(0, 0) = RCt * skew(p_f);
  dc.block<3, 3>(0, 3) = -RCt;
  return projection_jacobian(K, c) * dc;
}

Eigen::Matrix<double, 1, 9> lidar_row(const Pose& T_L, const LidarPoint& pt) {
  const Vec3 w = T_L.act(pt.z);
  Eigen::Matrix<double, 1, 9> row = Eigen::Matrix<double, 1, 9>::Zero();
  row.head<3>() = pt.u.transpose() * skew(w);
  row.segment<3>(3) = -pt.u.transpose();
  return row;
}

}  // namespace

MatX camera_jacobian(const ExtendedPose& X, const Extrinsics& ext, const CameraIntrinsics& K,
                     const std::vector<CameraFeature>& features, const LandmarkMap& landmarks) {
  const Pose T_C = X.pose() * ext.T_IC;
  const Mat3 RCt = T_C.R.transpose();
  MatX H(2 * features.size(), 9);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vec3& p_f = landmarks.at(features[i].landmark_id);
    const Vec3 c = RCt * (p_f - T_C.p);
    if (c.z() <= kMinDepth) throw Error(ErrorCode::BehindCamera, "point behind camera");
    H.block<2, 9>(2 * i, 0) = camera_row(K, RCt, p_f, c);
  }
  return H;
}

MatX lidar_jacobian(const ExtendedPose& X, const Extrinsics& ext,
                    const std::vector<LidarPoint>& points) {
  const Pose T_L = X.pose() * ext.T_IL;
  MatX H(points.size(), 9);
  for (std::size_t j = 0; j < points.size(); ++j) H.row(j) = lidar_row(T_L, points[j]);
  return H;
}

Linearization linearize(const MeasurementBatch& batch, const SensorSetup& setup,
                        const ExtendedPose& X) {
  Linearization lin;
  if (const auto* cam = std::get_if<CameraBatch>(&batch)) {
    if (setup.landmarks == nullptr) {
      throw Error(ErrorCode::MissingLandmark, "camera update without a landmark map");
    }
    const Pose T_C = X.pose() * setup.extrinsics.T_IC;
    const Mat3 RCt = T_C.R.transpose();
    const std::size_t n = cam->features.size();
    lin.r.resize(2 * n);
    lin.H.resize(2 * n, 9);
    int k = 0;
    for (const auto& f : cam->features) {
      const Vec3& p_f = setup.landmarks->at(f.landmark_id);
      const Vec3 c = RCt * (p_f - T_C.p);
      if (c.z() <= kMinDepth) {
        ++lin.dropped;
        continue;
      }
      lin.r.segment<2>(2 * k) = f.z - project(setup.intrinsics, c);
      lin.H.block<2, 9>(2 * k, 0) = camera_row(setup.intrinsics, RCt, p_f, c);
      ++k;
    }
    lin.r.conservativeResize(2 * k);
    lin.H.conservativeResize(2 * k, 9);
    lin.used = k;
    lin.sigma = setup.sigma_camera;
    return lin;
  }
  const auto& pts = std::get<LidarBatch>(batch).points;
  const Pose T = X.pose();
  lin.r = lidar_residual(T, setup.extrinsics, pts);
  lin.H = lidar_jacobian(X, setup.extrinsics, pts);
  lin.used = static_cast<int>(pts.size());
  lin.sigma = setup.sigma_lidar;
  return lin;
}

}  // namespace eikf
