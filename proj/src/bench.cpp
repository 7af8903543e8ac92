#include "eikf/bench.hpp"

#include "eikf/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace eikf {

namespace {

struct BenchProblem {
  BeliefState prior;
  EskfState eskf;
  MeasurementBatch batch;
  LandmarkMap map;
  SensorSetup setup;
};

void make_problem(BenchProblem& pb, int n, SensorKind sensor, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const ExtendedPose truth{so3_exp(Vec3(g(rng), g(rng), g(rng)) * 0.5), Vec3(g(rng), g(rng), g(rng)),
                           Vec3::Zero()};
  pb.setup = SensorSetup{};
  pb.setup.sigma_camera = 1.0;
  pb.setup.sigma_lidar = 0.2;
  if (sensor == SensorKind::Camera) {
    pb.map = LandmarkMap{};
    CameraBatch cam;
    std::uniform_real_distribution<double> lat(-0.6, 0.6);
    std::uniform_real_distribution<double> depth(5.0, 30.0);
    const Pose T_C = truth.pose() * pb.setup.extrinsics.T_IC;
    for (int i = 0; i < n; ++i) {
      const double d = depth(rng);
      const Vec3 c(lat(rng) * d, lat(rng) * d, d);
      pb.map.add(i, T_C.act(c));
      cam.features.push_back({i, project(pb.setup.intrinsics, c) + Vec2(g(rng), g(rng))});
    }
    pb.batch = std::move(cam);
  } else {
    LidarBatch lid;
    const Pose T_L = truth.pose() * pb.setup.extrinsics.T_IL;
    for (int i = 0; i < n; ++i) {
      LidarPoint pt;
      pt.u = Vec3(g(rng), g(rng), g(rng)).normalized();
      const Vec3 w = T_L.p + Vec3(g(rng), g(rng), g(rng)) * 20.0;
      pt.q = w + pt.u.cross(Vec3(g(rng), g(rng), g(rng)));
      pt.z = T_L.R.transpose() * (w - T_L.p) + Vec3(g(rng), g(rng), g(rng)) * 0.2;
      lid.points.push_back(pt);
    }
    pb.batch = std::move(lid);
  }
  pb.setup.landmarks = &pb.map;
  Tangent9 dev;
  for (int i = 0; i < 9; ++i) dev(i) = 0.05 * g(rng);
  pb.prior.mean = se23_exp(dev) * truth;
  Vec15 sd;
  sd << Vec3::Constant(0.1), Vec3::Constant(0.3), Vec3::Constant(0.1), Vec3::Constant(0.01),
      Vec3::Constant(0.01);
  const Mat15 local = sd.cwiseProduct(sd).asDiagonal();
  pb.prior.cov = invariant_cov_from_local(local, pb.prior.mean);
  pb.eskf.mean = pb.prior.mean;
  pb.eskf.cov = local;
}

void run_update(const BenchProblem& pb, FilterVariant v) {
  UpdateConfig cfg;
  cfg.variant = v;
  switch (v) {
    case FilterVariant::EKF:
      cfg.l_max = 1;
      [[fallthrough]];
    case FilterVariant::IEKF:
      baseline_update(pb.eskf, pb.batch, pb.setup, cfg);
      break;
    case FilterVariant::InEKF:
      cfg.l_max = 1;
      [[fallthrough]];
    case FilterVariant::EIKF_I:
      iterated_update(pb.prior, pb.batch, pb.setup, cfg, pb.prior.mean);
      break;
    case FilterVariant::EIKF_C:
      practical_eikf_update(pb.prior, pb.batch, pb.setup, cfg);
      break;
  }
}

}  // namespace

std::vector<BenchRow> bench_update(const std::vector<int>& n_list, SensorKind sensor, int reps,
                                   const std::vector<FilterVariant>& variants,
                                   std::uint64_t seed) {
  std::vector<BenchRow> rows;
  std::mt19937_64 rng = trial_rng(seed, 0, 2);
  for (int n : n_list) {
    std::vector<std::vector<double>> times(variants.size());
    for (int r = 0; r < std::max(1, reps); ++r) {
      BenchProblem pb;
      make_problem(pb, n, sensor, rng);
      for (std::size_t k = 0; k < variants.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        run_update(pb, variants[k]);
        const auto t1 = std::chrono::steady_clock::now();
        times[k].push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
    }
    for (std::size_t k = 0; k < variants.size(); ++k) {
      auto& t = times[k];
      std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
      rows.push_back({n, variants[k], t[t.size() / 2]});
    }
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace eikf
