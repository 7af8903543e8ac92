#include "eikf/selftest.hpp"

#include "eikf/consistent.hpp"
#include "eikf/filter.hpp"
#include "eikf/sim.hpp"

#include <random>
#include <sstream>

namespace eikf {

CameraJacobianFn default_camera_jacobian() {
  return [](const ExtendedPose& X, const Extrinsics& ext, const CameraIntrinsics& K,
            const std::vector<CameraFeature>& f, const LandmarkMap& m) {
    return camera_jacobian(X, ext, K, f, m);
  };
}

namespace {

Vec3 normal3(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  return {n(rng), n(rng), n(rng)};
}

Tangent9 normal9(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  Tangent9 x;
  for (int i = 0; i < 9; ++i) x(i) = n(rng);
  return x;
}

ExtendedPose random_pose(std::mt19937_64& rng) {
  ExtendedPose X;
  X.R = so3_exp(normal3(rng, 1.0));
  X.p = normal3(rng, 5.0);
  X.v = normal3(rng, 2.0);
  return X;
}

struct CameraScene {
  ExtendedPose X;
  Extrinsics ext;
  CameraIntrinsics K;
  LandmarkMap map;
  std::vector<CameraFeature> features;
};

CameraScene camera_scene(std::mt19937_64& rng, int n) {
  CameraScene s;
  s.X = random_pose(rng);
  s.ext.T_IC = {so3_exp(normal3(rng, 0.3)), normal3(rng, 0.1)};
  const Pose T_C = s.X.pose() * s.ext.T_IC;
  std::uniform_real_distribution<double> lat(-3.0, 3.0);
  std::uniform_real_distribution<double> depth(4.0, 20.0);
  for (int i = 0; i < n; ++i) {
    const Vec3 c(lat(rng), lat(rng), depth(rng));
    s.map.add(i, T_C.act(c));
    s.features.push_back({i, project(s.K, c)});
  }
  return s;
}

struct LidarScene {
  ExtendedPose X;
  Extrinsics ext;
  std::vector<LidarPoint> points;
};

LidarScene lidar_scene(std::mt19937_64& rng, int n) {
  LidarScene s;
  s.X = random_pose(rng);
  s.ext.T_IL = {so3_exp(normal3(rng, 0.3)), normal3(rng, 0.1)};
  const Pose T_L = s.X.pose() * s.ext.T_IL;
  for (int i = 0; i < n; ++i) {
    LidarPoint pt;
    pt.u = normal3(rng, 1.0).normalized();
    const Vec3 w = T_L.p + normal3(rng, 10.0);
    Vec3 t = pt.u.cross(normal3(rng, 1.0));
    pt.q = w + t;
    pt.z = T_L.R.transpose() * (w - T_L.p);
    s.points.push_back(pt);
  }
  return s;
}

template <typename Residual>
MatX numeric_jacobian(const ExtendedPose& X, Residual r, double h = 1e-6) {
  const VecX r0 = r(X);
  MatX H(r0.rows(), 9);
  for (int k = 0; k < 9; ++k) {
    Tangent9 e = Tangent9::Zero();
    e(k) = h;
    H.col(k) = -(r(se23_exp(e) * X) - r(se23_exp(-e) * X)) / (2 * h);
  }
  return H;
}

double relative_error(const MatX& a, const MatX& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

Mat15 random_spd(std::mt19937_64& rng, double scale) {
  Mat15 A;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 15; ++j) A(i, j) = n(rng);
  return scale * (A * A.transpose() / 15.0 + 0.1 * Mat15::Identity());
}

PropertyResult check(const std::string& name, double worst, double tol) {
  std::ostringstream os;
  os << "worst " << worst << " (tol " << tol << ")";
  return {name, worst <= tol, os.str()};
}

}  // namespace

std::vector<PropertyResult> run_selftest(const SelftestOptions& opt) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(20240601);
  const int N = std::max(1, opt.cases);

  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    Tangent9 xi = normal9(rng, 1.0);
    worst = std::max(worst, (se23_log(se23_exp(xi)) - xi).norm());
  }
  out.push_back(check("exp_log_roundtrip", worst, 1e-9));

  worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const ExtendedPose X = random_pose(rng);
    const ExtendedPose Y = random_pose(rng);
    worst = std::max(worst, (adjoint(X * Y) - adjoint(X) * adjoint(Y)).norm());
  }
  out.push_back(check("adjoint_homomorphism", worst, 1e-10));

  const Mat9 A = error_drift_matrix(Vec3(0, 0, -9.81));
  out.push_back(check("drift_nilpotent", (A * A * A).norm(), 0.0));

  worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const CameraScene s = camera_scene(rng, 8);
    CameraScene perturbed = s;
    perturbed.X = se23_exp(normal9(rng, 0.01)) * s.X;
    const MatX H = opt.camera_jacobian(perturbed.X, s.ext, s.K, s.features, s.map);
    const MatX Hn = numeric_jacobian(perturbed.X, [&](const ExtendedPose& Y) {
      return camera_residual(Y.pose(), s.ext, s.K, s.features, s.map);
    });
    worst = std::max(worst, relative_error(H, Hn));
  }
  out.push_back(check("camera_jacobian_fd", worst, 1e-4));

  worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const LidarScene s = lidar_scene(rng, 8);
    const MatX H = lidar_jacobian(s.X, s.ext, s.points);
    const MatX Hn = numeric_jacobian(s.X, [&](const ExtendedPose& Y) {
      return lidar_residual(Y.pose(), s.ext, s.points);
    });
    worst = std::max(worst, relative_error(H, Hn));
  }
  out.push_back(check("lidar_jacobian_fd", worst, 1e-4));

  worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const CameraScene s = camera_scene(rng, 30);
    const Pose truth = s.X.pose() * s.ext.T_IC;
    const Pose est = camera_consistent_pose(s.features, s.map, s.K).pose;
    worst = std::max(worst, se3_log(est * truth.inverse()).norm());
  }
  out.push_back(check("camera_noise_free_recovery", worst, 1e-7));

  worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const LidarScene s = lidar_scene(rng, 30);
    const Pose truth = s.X.pose() * s.ext.T_IL;
    const Pose est = lidar_consistent_pose(s.points).pose;
    worst = std::max(worst, se3_log(est * truth.inverse()).norm());
  }
  out.push_back(check("lidar_noise_free_recovery", worst, 1e-7));

  // One iteration from the prior mean against the bare gain formula.
  worst = 0.0;
  double worst_psd = 0.0;
  for (int i = 0; i < N; ++i) {
    const LidarScene s = lidar_scene(rng, 20);
    BeliefState prior;
    prior.mean = se23_exp(normal9(rng, 0.05)) * s.X;
    prior.cov = random_spd(rng, 0.01);
    SensorSetup setup;
    setup.extrinsics = s.ext;
    setup.sigma_lidar = 0.2;
    UpdateConfig cfg;
    cfg.l_max = 1;
    const MeasurementBatch batch = LidarBatch{s.points};
    const UpdateResult res = iterated_update(prior, batch, setup, cfg, prior.mean);
    const Linearization lin = linearize(batch, setup, prior.mean);
    MatX H = MatX::Zero(lin.H.rows(), 15);
    H.leftCols(9) = lin.H;
    const MatX S = H * prior.cov * H.transpose() +
                   0.04 * MatX::Identity(H.rows(), H.rows());
    const MatX K = prior.cov * H.transpose() * S.inverse();
    const VecX dx = K * lin.r;
    const ExtendedPose X = se23_exp(dx.head<9>()) * prior.mean;
    worst = std::max(worst, (se23_log(X * res.belief.mean.inverse())).norm());
    const Eigen::SelfAdjointEigenSolver<Mat15> eig(res.belief.cov);
    worst_psd = std::max({worst_psd, -eig.eigenvalues().minCoeff(),
                          (res.belief.cov - res.belief.cov.transpose()).norm()});
  }
  out.push_back(check("single_iteration_matches_invariant_update", worst, 1e-10));
  out.push_back(check("posterior_symmetric_psd", worst_psd, 0.0));

  worst = 0.0;
  for (int i = 0; i < N; ++i) {
    BeliefState prior;
    prior.mean = random_pose(rng);
    prior.cov = random_spd(rng, 0.01);
    const Pose T = se3_exp(Tangent6(normal9(rng, 0.1).head<6>())) * prior.mean.pose();
    const BeliefState post = fused_map_with_virtual_pose(prior, T, Mat6::Zero());
    worst = std::max(worst, se23_log(post.mean * prior.mean.inverse()).norm());
  }
  out.push_back(check("virtual_pose_uninformative", worst, 1e-12));

  {
    ScenarioConfig cfg;
    cfg.duration = 1.0;
    cfg.trials = 1;
    cfg.landmarks = 60;
    cfg.seed = 7;
    const TrialResult a = run_trial(cfg, 0);
    const TrialResult b = run_trial(cfg, 0);
    bool same = a.filters.size() == b.filters.size();
    for (std::size_t k = 0; same && k < a.filters.size(); ++k) {
      same = a.filters[k].position_err_m == b.filters[k].position_err_m &&
             a.filters[k].orientation_err_deg == b.filters[k].orientation_err_deg;
    }
    out.push_back({"simulation_determinism", same, same ? "identical" : "traces differ"});
  }
  return out;
}

}  // namespace eikf
