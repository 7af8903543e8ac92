#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace eikf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat15 = Eigen::Matrix<double, 15, 15>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Tangent vectors of SE2(3) are always ordered [theta; rho_p; rho_v].
using Tangent9 = Vec9;
// Tangent vectors of SE(3) are ordered [theta; rho].
using Tangent6 = Vec6;

enum class ErrorCode {
  AngleAtPi,
  DimensionMismatch,
  BehindCamera,
  MissingLandmark,
  TooFewFeatures,
  SingularPencil,
  IllConditioned,
  DegenerateRotationBlock,
  DegenerateGeometry,
  EmptyWindow,
  NonMonotonicTime,
  EmptyBatch,
  LogDomain,
  NumericalFailure,
  AllDiverged,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eikf
