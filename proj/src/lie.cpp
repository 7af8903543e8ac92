#include "eikf/lie.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace eikf {

Mat3 skew(const Vec3& w) {
  Mat3 W;
  W << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return W;
}

Vec3 vee(const Mat3& W) { return Vec3(W(2, 1), W(0, 2), W(1, 0)); }

Mat3 so3_exp(const Vec3& theta) {
  const double a = theta.norm();
  const Mat3 W = skew(theta);
  if (a < kSmallAngle) return Mat3::Identity() + W + 0.5 * W * W;
  return Mat3::Identity() + (std::sin(a) / a) * W + ((1.0 - std::cos(a)) / (a * a)) * W * W;
}

Vec3 so3_log(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 w = 0.5 * vee(R - R.transpose());
  const double s = w.norm();
  const double a = std::atan2(s, c);
  if (std::numbers::pi - a < kPiMargin) {
    throw Error(ErrorCode::AngleAtPi, "rotation angle at pi, logarithm is not unique");
  }
  if (a < kSmallAngle) return w * (1.0 + a * a / 6.0);
  if (a > std::numbers::pi - 1e-3) {
    // sin(a) is tiny here; read the axis from the symmetric part instead.
    const Mat3 B = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
    int k = 0;
    B.diagonal().maxCoeff(&k);
    Vec3 axis = B.col(k) / std::sqrt(B(k, k) * (1.0 - c));
    if (axis.dot(w) < 0.0) axis = -axis;
    return a * axis.normalized();
  }
  return (a / s) * w;
}

Mat3 so3_left_jacobian(const Vec3& theta) {
  const double a = theta.norm();
  const Mat3 W = skew(theta);
  if (a < kSmallAngle) return Mat3::Identity() + 0.5 * W + W * W / 6.0;
  const double a2 = a * a;
  return Mat3::Identity() + ((1.0 - std::cos(a)) / a2) * W + ((a - std::sin(a)) / (a2 * a)) * W * W;
}

Mat3 so3_left_jacobian_inv(const Vec3& theta) {
  const double a = theta.norm();
  const Mat3 W = skew(theta);
  if (a < kSmallAngle) return Mat3::Identity() - 0.5 * W + W * W / 12.0;
  const double coeff = 1.0 / (a * a) - (1.0 + std::cos(a)) / (2.0 * a * std::sin(a));
  return Mat3::Identity() - 0.5 * W + coeff * W * W;
}

double rotation_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double s = 0.5 * vee(R - R.transpose()).norm();
  return std::atan2(s, c);
}

Mat3 project_to_so3(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Mat3 rotation_from_rpy(double roll, double pitch, double yaw) {
  return so3_exp(Vec3(0, 0, yaw)) * so3_exp(Vec3(0, pitch, 0)) * so3_exp(Vec3(roll, 0, 0));
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = R;
  T.topRightCorner<3, 1>() = p;
  return T;
}

Eigen::Matrix<double, 5, 5> ExtendedPose::matrix() const {
  Eigen::Matrix<double, 5, 5> X = Eigen::Matrix<double, 5, 5>::Identity();
  X.topLeftCorner<3, 3>() = R;
  X.block<3, 1>(0, 3) = p;
  X.block<3, 1>(0, 4) = v;
  return X;
}

ExtendedPose se23_exp(const Tangent9& xi) {
  const Vec3 theta = theta_of(xi);
  const Mat3 Jl = so3_left_jacobian(theta);
  return {so3_exp(theta), Jl * rho_p_of(xi), Jl * rho_v_of(xi)};
}

Tangent9 se23_log(const ExtendedPose& X) {
  const Vec3 theta = so3_log(X.R);
  const Mat3 Jinv = so3_left_jacobian_inv(theta);
  Tangent9 xi;
  xi << theta, Jinv * X.p, Jinv * X.v;
  return xi;
}

Pose se3_exp(const Tangent6& xi) {
  const Vec3 theta = xi.head<3>();
  return {so3_exp(theta), so3_left_jacobian(theta) * xi.tail<3>()};
}

Tangent6 se3_log(const Pose& T) {
  const Vec3 theta = so3_log(T.R);
  Tangent6 xi;
  xi << theta, so3_left_jacobian_inv(theta) * T.p;
  return xi;
}

Eigen::Matrix<double, 5, 5> hat(const Tangent9& xi) {
  Eigen::Matrix<double, 5, 5> M = Eigen::Matrix<double, 5, 5>::Zero();
  M.topLeftCorner<3, 3>() = skew(theta_of(xi));
  M.block<3, 1>(0, 3) = rho_p_of(xi);
  M.block<3, 1>(0, 4) = rho_v_of(xi);
  return M;
}

Mat9 adjoint(const ExtendedPose& X) {
  Mat9 A = Mat9::Zero();
  A.block<3, 3>(0, 0) = X.R;
  A.block<3, 3>(3, 0) = skew(X.p) * X.R;
  A.block<3, 3>(3, 3) = X.R;
  A.block<3, 3>(6, 0) = skew(X.v) * X.R;
  A.block<3, 3>(6, 6) = X.R;
  return A;
}

Mat6 adjoint(const Pose& T) {
  Mat6 A = Mat6::Zero();
  A.block<3, 3>(0, 0) = T.R;
  A.block<3, 3>(3, 0) = skew(T.p) * T.R;
  A.block<3, 3>(3, 3) = T.R;
  return A;
}

Mat9 little_ad(const Tangent9& x) {
  Mat9 A = Mat9::Zero();
  const Mat3 Th = skew(theta_of(x));
  A.block<3, 3>(0, 0) = Th;
  A.block<3, 3>(3, 0) = skew(rho_p_of(x));
  A.block<3, 3>(3, 3) = Th;
  A.block<3, 3>(6, 0) = skew(rho_v_of(x));
  A.block<3, 3>(6, 6) = Th;
  return A;
}

Mat6 little_ad(const Tangent6& x) {
  Mat6 A = Mat6::Zero();
  const Mat3 Th = skew(x.head<3>());
  A.block<3, 3>(0, 0) = Th;
  A.block<3, 3>(3, 0) = skew(x.tail<3>());
  A.block<3, 3>(3, 3) = Th;
  return A;
}

double bernoulli_number(int i) {
  static const std::array<double, 41> table = [] {
    std::array<double, 41> B{};
    B[0] = 1.0;
    for (int m = 1; m <= 40; ++m) {
      double acc = 0.0;
      double binom = 1.0;  // C(m+1, k)
      for (int k = 0; k < m; ++k) {
        acc += binom * B[k];
        binom = binom * (m + 1 - k) / (k + 1);
      }
      B[m] = -acc / (m + 1);
    }
    return B;
  }();
  return table.at(static_cast<std::size_t>(i));
}

namespace {

template <int N>
Eigen::Matrix<double, N, N> bernoulli_series(const Eigen::Matrix<double, N, N>& ad, int order) {
  using M = Eigen::Matrix<double, N, N>;
  M sum = M::Identity();
  M power = M::Identity();
  double factorial = 1.0;
  for (int i = 1; i <= order; ++i) {
    power = power * ad;
    factorial *= i;
    const double b = bernoulli_number(i);
    if (b != 0.0) sum += (b / factorial) * power;
  }
  return sum;
}

template <int N>
Eigen::Matrix<double, N, N> exp_series_jacobian(const Eigen::Matrix<double, N, N>& ad) {
  using M = Eigen::Matrix<double, N, N>;
  M sum = M::Identity();
  M term = M::Identity();
  for (int i = 1; i < 120; ++i) {
    term = term * ad / static_cast<double>(i + 1);
    sum += term;
    if (i > 3 && term.norm() <= 1e-18 * sum.norm()) break;
  }
  return sum;
}

// J has the block form [[A,0,..],[B,A,..],..] with identical diagonal blocks.
template <int N>
Eigen::Matrix<double, N, N> invert_block_lower(const Eigen::Matrix<double, N, N>& J) {
  using M = Eigen::Matrix<double, N, N>;
  const Mat3 Ainv = J.template block<3, 3>(0, 0).inverse();
  M inv = M::Zero();
  for (int b = 0; b < N / 3; ++b) inv.template block<3, 3>(3 * b, 3 * b) = Ainv;
  for (int b = 1; b < N / 3; ++b) {
    inv.template block<3, 3>(3 * b, 0) = -Ainv * J.template block<3, 3>(3 * b, 0) * Ainv;
  }
  return inv;
}

}  // namespace

Mat9 dexp_inv(const Tangent9& xi, int order) { return bernoulli_series<9>(little_ad(xi), order); }
Mat6 dexp_inv(const Tangent6& xi, int order) { return bernoulli_series<6>(little_ad(xi), order); }
Mat9 dexp(const Tangent9& xi) { return exp_series_jacobian<9>(little_ad(xi)); }
Mat6 dexp(const Tangent6& xi) { return exp_series_jacobian<6>(little_ad(xi)); }
Mat9 dexp_inv_exact(const Tangent9& xi) { return invert_block_lower<9>(dexp(xi)); }
Mat6 dexp_inv_exact(const Tangent6& xi) { return invert_block_lower<6>(dexp(xi)); }

Tangent9 bch_compose_left_small(const Tangent9& x, const Tangent9& y) {
  return dexp_inv_exact(y) * x + y;
}

}  // namespace eikf
