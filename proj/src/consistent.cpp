#include "eikf/consistent.hpp"

#include <cmath>
#include <string>

namespace eikf {

namespace {

constexpr double kMaxCondition = 1e12;

// Solves (N) x = rhs after symmetric column equilibration; throws IllConditioned.
VecX equilibrated_solve(const MatX& N, const VecX& rhs) {
  const VecX d = N.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const MatX Ns = d.asDiagonal() * N * d.asDiagonal();
  Eigen::JacobiSVD<MatX> svd(Ns, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 0.0) || s(0) / s(s.size() - 1) > kMaxCondition) {
    throw Error(ErrorCode::IllConditioned, "normal matrix condition number exceeds 1e12");
  }
  return d.asDiagonal() * svd.solve(d.asDiagonal() * rhs);
}

}  // namespace

CameraLinearSystem build_camera_system(const std::vector<CameraFeature>& features,
                                       const LandmarkMap& landmarks, const CameraIntrinsics& K) {
  const int n = static_cast<int>(features.size());
  if (n < kMinCameraFeatures) {
    throw Error(ErrorCode::TooFewFeatures,
                "camera system needs " + std::to_string(kMinCameraFeatures) + " features, got " +
                    std::to_string(n));
  }
  CameraLinearSystem sys;
  for (const auto& f : features) sys.p_bar_f += landmarks.at(f.landmark_id);
  sys.p_bar_f /= n;

  sys.A = MatX::Zero(2 * n, 11);
  sys.G = MatX::Zero(2 * n, 11);
  sys.b.resize(2 * n);
  for (int i = 0; i < n; ++i) {
    const Vec3& p = landmarks.at(features[i].landmark_id);
    const Vec3 dp = p - sys.p_bar_f;
    const double u = features[i].z.x() - K.u0;
    const double v = features[i].z.y() - K.v0;
    const int ru = 2 * i;
    const int rv = 2 * i + 1;
    sys.A.block<1, 3>(ru, 0) = -u * dp.transpose();
    sys.A.block<1, 3>(ru, 3) = K.fx * p.transpose();
    sys.A(ru, 6) = K.fx;
    sys.A.block<1, 3>(rv, 0) = -v * dp.transpose();
    sys.A.block<1, 3>(rv, 7) = K.fy * p.transpose();
    sys.A(rv, 10) = K.fy;
    sys.G.block<1, 3>(ru, 0) = -dp.transpose();
    sys.G.block<1, 3>(rv, 0) = -dp.transpose();
    sys.b(ru) = u;
    sys.b(rv) = v;
  }
  return sys;
}

double smallest_pencil_eigenvalue(const MatX& M, const MatX& N) {
  const VecX d = M.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const MatX Ms = d.asDiagonal() * M * d.asDiagonal();
  const MatX Ns = d.asDiagonal() * N * d.asDiagonal();
  // Consistent (noise-free) data leaves M singular up to roundoff.
  Eigen::SelfAdjointEigenSolver<MatX> m_eig(Ms, Eigen::EigenvaluesOnly);
  if (m_eig.eigenvalues()(0) <= 1e-12 * m_eig.eigenvalues().maxCoeff()) return 0.0;
  Eigen::LLT<MatX> llt(Ms);
  if (llt.info() != Eigen::Success) return 0.0;
  // Eigenvalues of L^-1 N L^-T are the reciprocals of the pencil's eigenvalues.
  const MatX X = llt.matrixL().solve(Ns);
  const MatX C = llt.matrixL().solve(X.transpose());
  Eigen::SelfAdjointEigenSolver<MatX> eig(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues().maxCoeff();
  if (!(mu > 1e-300) || !std::isfinite(mu)) {
    throw Error(ErrorCode::SingularPencil, "pencil has no finite nonnegative eigenvalue");
  }
  return 1.0 / mu;
}

double estimate_noise_variance(const MatX& A, const VecX& b, const MatX& G, const VecX& g) {
  if (A.rows() != b.rows() || G.rows() != A.rows() || g.rows() != A.rows() ||
      G.cols() != A.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "pencil blocks disagree in shape");
  }
  const double n = static_cast<double>(A.rows());
  MatX Ab(A.rows(), A.cols() + 1);
  Ab << A, b;
  MatX Gg(G.rows(), G.cols() + 1);
  Gg << G, g;
  return smallest_pencil_eigenvalue(Ab.transpose() * Ab / n, Gg.transpose() * Gg / n);
}

double estimate_noise_variance(const CameraLinearSystem& sys) {
  return estimate_noise_variance(sys.A, sys.b, sys.G, VecX::Ones(sys.b.rows()));
}

double estimate_noise_variance(const LidarLinearSystem& sys) {
  const double n = static_cast<double>(sys.A.rows());
  MatX Ab(sys.A.rows(), 13);
  Ab << sys.A, sys.b;
  MatX N = MatX::Zero(13, 13);
  N.topLeftCorner<12, 12>() = sys.Q_bar;
  return smallest_pencil_eigenvalue(Ab.transpose() * Ab / n, N);
}

Vec11 bias_eliminated_camera_solve(const CameraLinearSystem& sys, double sigma_hat) {
  const double s2 = sigma_hat * sigma_hat;
  const MatX N = sys.A.transpose() * sys.A - s2 * (sys.G.transpose() * sys.G);
  const VecX rhs = sys.A.transpose() * sys.b - s2 * (sys.G.transpose() * VecX::Ones(sys.b.rows()));
  return equilibrated_solve(N, rhs);
}

Vec12 recover_scale_and_assemble(const Vec11& x, const CameraLinearSystem& sys) {
  Mat3 B;  // rows r1, r2, r3 of alpha R_C^T
  B.row(0) = x.segment<3>(3).transpose();
  B.row(1) = x.segment<3>(7).transpose();
  B.row(2) = x.segment<3>(0).transpose();
  const double det = B.determinant();
  const double scale = B.norm() / std::sqrt(3.0);
  if (!(std::abs(det) > 1e-12 * scale * scale * scale)) {
    throw Error(ErrorCode::DegenerateRotationBlock, "rotation block is singular");
  }
  const double alpha = std::cbrt(det);
  const Mat3 Rt = B / alpha;
  Vec3 t;
  t.x() = x(6) / alpha;
  t.y() = x(10) / alpha;
  // 1/|alpha| is the mean depth, which must be positive.
  t.z() = 1.0 / std::abs(alpha) - Rt.row(2).dot(sys.p_bar_f);
  Vec12 out;
  out << Rt.col(0), Rt.col(1), Rt.col(2), t;
  return out;
}

Pose project_to_se3(const Vec12& x, PoseConvention convention) {
  Mat3 M;
  M << x.segment<3>(0), x.segment<3>(3), x.segment<3>(6);
  const Vec3 t = x.segment<3>(9);
  if (convention == PoseConvention::Direct) return {project_to_so3(M), t};
  const Mat3 R = project_to_so3(M).transpose();
  return {R, -R * t};
}

LidarLinearSystem build_lidar_system(const std::vector<LidarPoint>& points) {
  const int n = static_cast<int>(points.size());
  if (n < kMinLidarPoints) {
    throw Error(ErrorCode::TooFewFeatures,
                "LiDAR system needs " + std::to_string(kMinLidarPoints) + " points, got " +
                    std::to_string(n));
  }
  LidarLinearSystem sys;
  sys.A.resize(n, 12);
  sys.b.resize(n);
  Mat3 UUt = Mat3::Zero();
  for (int j = 0; j < n; ++j) {
    const auto& pt = points[j];
    for (int k = 0; k < 3; ++k) sys.A.block<1, 3>(j, 3 * k) = pt.z(k) * pt.u.transpose();
    sys.A.block<1, 3>(j, 9) = pt.u.transpose();
    sys.b(j) = pt.u.dot(pt.q);
    UUt += pt.u * pt.u.transpose();
  }
  UUt /= n;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(UUt, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) < 1e-9 * eig.eigenvalues()(2)) {
    throw Error(ErrorCode::DegenerateGeometry, "plane normals do not span R^3");
  }
  for (int k = 0; k < 3; ++k) sys.Q_bar.block<3, 3>(3 * k, 3 * k) = UUt;
  return sys;
}

Vec12 bias_eliminated_lidar_vector(const LidarLinearSystem& sys, double sigma_hat) {
  const double n = static_cast<double>(sys.A.rows());
  const MatX N = sys.A.transpose() * sys.A / n - sigma_hat * sigma_hat * MatX(sys.Q_bar);
  const VecX rhs = sys.A.transpose() * sys.b / n;
  return equilibrated_solve(N, rhs);
}

ConsistentPoseResult bias_eliminated_lidar_solve(const LidarLinearSystem& sys, double sigma_hat) {
  ConsistentPoseResult res;
  res.pose = project_to_se3(bias_eliminated_lidar_vector(sys, sigma_hat), PoseConvention::Direct);
  res.sigma_hat = sigma_hat;
  res.n_used = static_cast<int>(sys.A.rows());
  return res;
}

ConsistentPoseResult camera_consistent_pose(const std::vector<CameraFeature>& features,
                                            const LandmarkMap& landmarks,
                                            const CameraIntrinsics& K,
                                            std::optional<double> sigma) {
  const CameraLinearSystem sys = build_camera_system(features, landmarks, K);
  const double s = sigma ? *sigma : std::sqrt(std::max(estimate_noise_variance(sys), 0.0));
  const Vec11 x = bias_eliminated_camera_solve(sys, s);
  ConsistentPoseResult res;
  res.pose = project_to_se3(recover_scale_and_assemble(x, sys), PoseConvention::InverseRows);
  res.sigma_hat = s;
  res.n_used = static_cast<int>(features.size());
  return res;
}

ConsistentPoseResult lidar_consistent_pose(const std::vector<LidarPoint>& points,
                                           std::optional<double> sigma) {
  const LidarLinearSystem sys = build_lidar_system(points);
  const double s = sigma ? *sigma : std::sqrt(std::max(estimate_noise_variance(sys), 0.0));
  return bias_eliminated_lidar_solve(sys, s);
}

ConsistentPoseResult consistent_pose(const MeasurementBatch& batch, const SensorSetup& setup,
                                     std::optional<double> sigma) {
  if (const auto* cam = std::get_if<CameraBatch>(&batch)) {
    if (setup.landmarks == nullptr) {
      throw Error(ErrorCode::MissingLandmark, "camera pose without a landmark map");
    }
    return camera_consistent_pose(cam->features, *setup.landmarks, setup.intrinsics, sigma);
  }
  return lidar_consistent_pose(std::get<LidarBatch>(batch).points, sigma);
}

}  // namespace eikf
