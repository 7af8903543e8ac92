#pragma once

#include "eikf/types.hpp"

namespace eikf {

/// Below this angle exp/log/Jacobians switch to Taylor expansions.
inline constexpr double kSmallAngle = 1e-6;
/// log raises AngleAtPi when the rotation angle is this close to pi.
inline constexpr double kPiMargin = 1e-9;

Mat3 skew(const Vec3& w);
Vec3 vee(const Mat3& W);

Mat3 so3_exp(const Vec3& theta);
Vec3 so3_log(const Mat3& R);
Mat3 so3_left_jacobian(const Vec3& theta);
Mat3 so3_left_jacobian_inv(const Vec3& theta);
/// Geodesic angle of R in [0, pi]; never throws.
double rotation_angle(const Mat3& R);
/// Nearest rotation in Frobenius norm (orthogonal Procrustes).
Mat3 project_to_so3(const Mat3& M);
/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_from_rpy(double roll, double pitch, double yaw);

struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  static Pose identity() { return {}; }
  Pose operator*(const Pose& o) const { return {R * o.R, R * o.p + p}; }
  Pose inverse() const { return {R.transpose(), -R.transpose() * p}; }
  Vec3 act(const Vec3& x) const { return R * x + p; }
  Eigen::Matrix4d matrix() const;
};

/// Element of SE2(3): IMU rotation, position and velocity in the world frame.
struct ExtendedPose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  static ExtendedPose identity() { return {}; }
  ExtendedPose operator*(const ExtendedPose& o) const {
    return {R * o.R, R * o.p + p, R * o.v + v};
  }
  ExtendedPose inverse() const {
    Mat3 Rt = R.transpose();
    return {Rt, -Rt * p, -Rt * v};
  }
  Pose pose() const { return {R, p}; }
  Eigen::Matrix<double, 5, 5> matrix() const;
};

inline Vec3 theta_of(const Tangent9& xi) { return xi.head<3>(); }
inline Vec3 rho_p_of(const Tangent9& xi) { return xi.segment<3>(3); }
inline Vec3 rho_v_of(const Tangent9& xi) { return xi.tail<3>(); }

ExtendedPose se23_exp(const Tangent9& xi);
Tangent9 se23_log(const ExtendedPose& X);
Pose se3_exp(const Tangent6& xi);
Tangent6 se3_log(const Pose& T);

/// 5x5 matrix xi^ of the Lie algebra se2(3).
Eigen::Matrix<double, 5, 5> hat(const Tangent9& xi);

Mat9 adjoint(const ExtendedPose& X);
Mat6 adjoint(const Pose& T);
Mat9 little_ad(const Tangent9& x);
Mat6 little_ad(const Tangent6& x);

/// Truncated Bernoulli series sum_{i<=order} B_i/i! ad^i of the inverse left
/// Jacobian. order = 2 gives I - ad/2 + ad^2/12.
Mat9 dexp_inv(const Tangent9& xi, int order = 4);
Mat6 dexp_inv(const Tangent6& xi, int order = 4);

/// Left Jacobian sum_i ad^i/(i+1)!, summed to machine precision.
Mat9 dexp(const Tangent9& xi);
Mat6 dexp(const Tangent6& xi);
/// Inverse of dexp(xi); valid for rotation angles below 2*pi.
Mat9 dexp_inv_exact(const Tangent9& xi);
Mat6 dexp_inv_exact(const Tangent6& xi);

/// First-order BCH: log(exp(x) exp(y)) ~ dexp^-1_y x + y for small x.
Tangent9 bch_compose_left_small(const Tangent9& x, const Tangent9& y);

/// Bernoulli number B_i with the B_1 = -1/2 convention, i <= 40.
double bernoulli_number(int i);

}  // namespace eikf
