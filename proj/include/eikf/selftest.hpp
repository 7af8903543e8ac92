#pragma once

#include "eikf/sensors.hpp"

#include <functional>
#include <string>
#include <vector>

namespace eikf {

using CameraJacobianFn = std::function<MatX(const ExtendedPose&, const Extrinsics&,
                                            const CameraIntrinsics&,
                                            const std::vector<CameraFeature>&, const LandmarkMap&)>;

CameraJacobianFn default_camera_jacobian();

struct SelftestOptions {
  /// Jacobian under test; replaced by fixtures to check that the suite catches mutations.
  CameraJacobianFn camera_jacobian = default_camera_jacobian();
  int cases = 20;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the fast property suites in memory.
std::vector<PropertyResult> run_selftest(const SelftestOptions& options = {});

}  // namespace eikf
