#include "eikf/sim.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace eikf {

namespace {

// Minimal rotation taking unit vector a onto unit vector b.
Mat3 rotation_between(const Vec3& a, const Vec3& b) {
  return Eigen::Quaterniond::FromTwoVectors(a, b).toRotationMatrix();
}

Vec3 gaussian3(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)) * sd;
}

Vec3 random_unit(std::mt19937_64& rng) {
  Vec3 v = gaussian3(rng, 1.0);
  while (v.norm() < 1e-9) v = gaussian3(rng, 1.0);
  return v.normalized();
}

void plane_basis(Plane& pl) {
  const Vec3 seed = std::abs(pl.u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  pl.e1 = pl.u.cross(seed).normalized();
  pl.e2 = pl.u.cross(pl.e1);
}

}  // namespace

std::string to_string(SensorKind s) { return s == SensorKind::Camera ? "camera" : "lidar"; }

std::string to_string(SweepAxis s) {
  switch (s) {
    case SweepAxis::None: return "none";
    case SweepAxis::Landmarks: return "landmarks";
    case SweepAxis::Noise: return "noise";
    case SweepAxis::InitScale: return "init_scale";
  }
  return "none";
}

Mat3 initial_attitude(const TrajectorySpec& spec) {
  return rotation_between(spec.body_rate.normalized(), Vec3::UnitX());
}

GroundTruthSample ground_truth(double t, const TrajectorySpec& spec) {
  const Vec3& A = spec.amplitude;
  const double f = spec.freq_xy;
  const double fz = spec.freq_z;
  const double s = std::sin(f * t);
  const double c = std::cos(f * t);
  const double sz = std::sin(fz * t);
  const double cz = std::cos(fz * t);
  GroundTruthSample g;
  g.X.p = {A.x() * s, spec.y_uses_sin ? A.y() * s : A.y() * c, A.z() * sz};
  g.X.v = {A.x() * f * c, spec.y_uses_sin ? A.y() * f * c : -A.y() * f * s, A.z() * fz * cz};
  g.accel = {-A.x() * f * f * s, spec.y_uses_sin ? -A.y() * f * f * s : -A.y() * f * f * c,
             -A.z() * fz * fz * sz};
  g.X.R = initial_attitude(spec) * so3_exp(spec.body_rate * t);
  g.omega = spec.body_rate;
  return g;
}

double sensor_rate(const ScenarioConfig& cfg) {
  return cfg.sensor == SensorKind::Camera ? cfg.cam_rate : cfg.lidar_rate;
}

int imu_per_update(const ScenarioConfig& cfg) {
  return static_cast<int>(std::lround(cfg.imu_rate / sensor_rate(cfg)));
}

void validate(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (!(cfg.duration > 0)) fail("duration must be positive");
  if (!(cfg.imu_rate > 0) || !(cfg.cam_rate > 0) || !(cfg.lidar_rate > 0)) {
    fail("rates must be positive");
  }
  const double ratio = cfg.imu_rate / sensor_rate(cfg);
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1) {
    fail("sensor rate must divide the IMU rate");
  }
  if (cfg.trials < 1) fail("trials must be at least 1");
  if (cfg.landmarks < 0) fail("landmarks must be nonnegative");
  if (cfg.filters.empty()) fail("no filters requested");
  if (cfg.update.l_max < 1) fail("l_max must be at least 1");
  if (!(cfg.update.tau > 0)) fail("tau must be positive");
  if (cfg.sweep != SweepAxis::None && cfg.sweep_values.empty()) fail("sweep without values");
  const NoiseParams& n = cfg.noise;
  for (double s : {n.sigma_g, n.sigma_a, n.sigma_bg, n.sigma_ba, n.sigma_camera, n.sigma_lidar}) {
    if (!(s >= 0)) fail("noise levels must be nonnegative");
  }
}

Extrinsics default_extrinsics(const TrajectorySpec& spec) {
  Extrinsics ext;
  ext.T_IC.R = rotation_between(Vec3::UnitZ(), spec.body_rate.normalized());
  return ext;
}

std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<Landmark> make_landmarks(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::vector<Landmark> out;
  out.reserve(cfg.landmarks);
  const Vec3& lo = cfg.landmark_box.lo;
  const Vec3& hi = cfg.landmark_box.hi;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < cfg.landmarks; ++i) {
    Vec3 p;
    for (int k = 0; k < 3; ++k) p(k) = lo(k) + (hi(k) - lo(k)) * u(rng);
    out.push_back({i, p});
  }
  return out;
}

std::vector<Plane> make_planes(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::vector<Plane> out;
  const Vec3& h = cfg.planes.room_half_extent;
  for (int axis = 0; axis < 3 && static_cast<int>(out.size()) < cfg.landmarks; ++axis) {
    for (double sgn : {-1.0, 1.0}) {
      if (static_cast<int>(out.size()) >= cfg.landmarks) break;
      Plane pl;
      pl.u = Vec3::Zero();
      pl.u(axis) = -sgn;  // facing the interior
      pl.q = Vec3::Zero();
      pl.q(axis) = sgn * h(axis);
      pl.unbounded = true;
      plane_basis(pl);
      out.push_back(pl);
    }
  }
  std::uniform_real_distribution<double> ut(0.0, cfg.duration);
  std::uniform_real_distribution<double> ur(cfg.planes.patch_min_range, cfg.planes.patch_max_range);
  while (static_cast<int>(out.size()) < cfg.landmarks) {
    Plane pl;
    pl.q = ground_truth(ut(rng), cfg.trajectory).X.p + random_unit(rng) * ur(rng);
    pl.u = random_unit(rng);
    plane_basis(pl);
    out.push_back(pl);
  }
  return out;
}

std::vector<ImuSample> synthesize_imu(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  const int n = static_cast<int>(std::lround(cfg.duration * cfg.imu_rate));
  const double dt = 1.0 / cfg.imu_rate;
  const double sq = std::sqrt(cfg.imu_rate);
  const NoiseParams& np = cfg.noise;
  std::vector<ImuSample> out(n);
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  GroundTruthSample cur = ground_truth(0.0, cfg.trajectory);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const GroundTruthSample next = ground_truth((k + 1) * dt, cfg.trajectory);
    // Acceleration that carries v_k exactly onto v_{k+1} under a zero-order hold.
    const Vec3 a_world = (next.X.v - cur.X.v) / dt;
    out[k].t = t;
    out[k].omega_m = cur.omega + bg + gaussian3(rng, np.sigma_g * sq);
    out[k].a_m = cur.X.R.transpose() * (a_world - cfg.gravity) + ba + gaussian3(rng, np.sigma_a * sq);
    bg += gaussian3(rng, np.sigma_bg / sq);
    ba += gaussian3(rng, np.sigma_ba / sq);
    cur = next;
  }
  return out;
}

CameraBatch synthesize_camera(const ScenarioConfig& cfg, const Extrinsics& ext,
                              const std::vector<Landmark>& landmarks, double t,
                              std::mt19937_64& rng) {
  const Pose T = ground_truth(t, cfg.trajectory).X.pose();
  const CameraIntrinsics& K = cfg.intrinsics;
  std::normal_distribution<double> n(0.0, cfg.noise.sigma_camera);
  CameraBatch batch;
  for (const auto& l : landmarks) {
    const Vec3 c = world_to_camera(T, ext, l.p_f);
    if (c.z() <= cfg.min_depth) continue;
    const Vec2 z = project(K, c);
    if (z.x() < 0 || z.x() > K.width || z.y() < 0 || z.y() > K.height) continue;
    batch.features.push_back({l.id, z + Vec2(n(rng), n(rng))});
  }
  return batch;
}

LidarBatch synthesize_lidar(const ScenarioConfig& cfg, const Extrinsics& ext,
                            const std::vector<Plane>& planes, double t, std::mt19937_64& rng) {
  const Pose T_L = ground_truth(t, cfg.trajectory).X.pose() * ext.T_IL;
  const double h = cfg.planes.patch_half_size;
  std::uniform_real_distribution<double> off(-h, h);
  LidarBatch batch;
  batch.points.reserve(planes.size());
  for (const auto& pl : planes) {
    Vec3 base = pl.q;
    if (pl.unbounded) base = T_L.p - pl.u * pl.u.dot(T_L.p - pl.q);
    const Vec3 w = base + off(rng) * pl.e1 + off(rng) * pl.e2;
    const Vec3 z = T_L.R.transpose() * (w - T_L.p) + gaussian3(rng, cfg.noise.sigma_lidar);
    batch.points.push_back({z, pl.u, pl.q});
  }
  return batch;
}

double orientation_error_deg(const Mat3& R_est, const Mat3& R_true) {
  return rotation_angle(R_est.transpose() * R_true) * 180.0 / M_PI;
}

TrialResult run_trial(const ScenarioConfig& cfg, int trial) {
  validate(cfg);
  // The scene is shared by all trials; noise is drawn per trial.
  std::mt19937_64 scene_rng = trial_rng(cfg.seed, 0, 1);
  std::vector<Landmark> landmarks;
  std::vector<Plane> planes;
  if (cfg.sensor == SensorKind::Camera) {
    landmarks = make_landmarks(cfg, scene_rng);
  } else {
    planes = make_planes(cfg, scene_rng);
  }
  const LandmarkMap map(landmarks);
  const Extrinsics ext = default_extrinsics(cfg.trajectory);

  std::mt19937_64 rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(trial));
  const std::vector<ImuSample> imu = synthesize_imu(cfg, rng);
  const int m = imu_per_update(cfg);
  const int n_updates = static_cast<int>(imu.size()) / m;
  std::vector<MeasurementBatch> batches;
  std::vector<double> times;
  batches.reserve(n_updates);
  for (int j = 1; j <= n_updates; ++j) {
    const double t = j * m / cfg.imu_rate;
    times.push_back(t);
    if (cfg.sensor == SensorKind::Camera) {
      batches.emplace_back(synthesize_camera(cfg, ext, landmarks, t, rng));
    } else {
      batches.emplace_back(synthesize_lidar(cfg, ext, planes, t, rng));
    }
  }

  const GroundTruthSample g0 = ground_truth(0.0, cfg.trajectory);
  const double s = cfg.deviation_scale;
  FilterInit init;
  init.mean.R = g0.X.R * rotation_from_rpy(s * cfg.init_rpy_dev.x(), s * cfg.init_rpy_dev.y(),
                                           s * cfg.init_rpy_dev.z());
  init.mean.p = g0.X.p + s * cfg.init_position_dev;
  init.mean.v = g0.X.v;
  Vec15 sd;
  sd << Vec3::Constant(cfg.init_sigma_theta), Vec3::Constant(cfg.init_sigma_p),
      Vec3::Constant(cfg.init_sigma_v), Vec3::Constant(cfg.init_sigma_bg),
      Vec3::Constant(cfg.init_sigma_ba);
  init.local_cov = sd.cwiseProduct(sd).asDiagonal();

  SensorSetup setup;
  setup.intrinsics = cfg.intrinsics;
  setup.extrinsics = ext;
  setup.landmarks = &map;
  setup.sigma_camera = cfg.noise.sigma_camera;
  setup.sigma_lidar = cfg.noise.sigma_lidar;

  TrialResult res;
  res.times = times;
  res.initial_position_dev = (s * cfg.init_position_dev).norm();
  std::vector<GroundTruthSample> truth;
  truth.reserve(times.size());
  for (double t : times) truth.push_back(ground_truth(t, cfg.trajectory));

  for (FilterVariant v : cfg.filters) {
    FilterTrace tr;
    tr.variant = v;
    auto filter = make_filter(v, init, setup, cfg.update, cfg.noise, cfg.gravity);
    for (int j = 0; j < n_updates && !tr.diverged; ++j) {
      const std::span<const ImuSample> window(imu.data() + j * m, m);
      try {
        filter->predict(window, times[j]);
        const auto t0 = std::chrono::steady_clock::now();
        filter->update(batches[j]);
        const auto t1 = std::chrono::steady_clock::now();
        tr.update_ms_total += std::chrono::duration<double, std::milli>(t1 - t0).count();
        ++tr.updates;
      } catch (const Error&) {
        tr.diverged = true;
        break;
      }
      const ExtendedPose X = filter->estimate();
      const double pe = (X.p - truth[j].X.p).norm();
      const double oe = orientation_error_deg(X.R, truth[j].X.R);
      if (!std::isfinite(pe) || !std::isfinite(oe) || pe > cfg.divergence_threshold) {
        tr.diverged = true;
        break;
      }
      tr.position_err_m.push_back(pe);
      tr.orientation_err_deg.push_back(oe);
    }
    res.filters.push_back(std::move(tr));
  }
  return res;
}

std::vector<TrialResult> run_scenario(const ScenarioConfig& cfg, int jobs) {
  validate(cfg);
  std::vector<TrialResult> results(cfg.trials);
  const int threads = std::max(1, std::min(jobs, cfg.trials));
  if (threads == 1) {
    for (int i = 0; i < cfg.trials; ++i) results[i] = run_trial(cfg, i);
    return results;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < cfg.trials; i = next++) results[i] = run_trial(cfg, i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

RmseSeries rmse(const std::vector<TrialResult>& results, std::size_t filter_index, Quantity q) {
  RmseSeries out;
  std::vector<double> sum;
  for (const auto& r : results) {
    if (filter_index >= r.filters.size()) {
      throw Error(ErrorCode::DimensionMismatch, "filter index out of range");
    }
    const FilterTrace& tr = r.filters[filter_index];
    if (tr.diverged) continue;
    const auto& e = q == Quantity::OrientationDeg ? tr.orientation_err_deg : tr.position_err_m;
    if (sum.empty()) {
      sum.assign(e.size(), 0.0);
      out.t.assign(r.times.begin(), r.times.begin() + e.size());
    }
    if (e.size() != sum.size()) throw Error(ErrorCode::DimensionMismatch, "trace lengths differ");
    for (std::size_t k = 0; k < e.size(); ++k) sum[k] += e[k] * e[k];
    ++out.trials_used;
  }
  if (out.trials_used == 0) throw Error(ErrorCode::AllDiverged, "every trial diverged");
  out.rmse.resize(sum.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < sum.size(); ++k) {
    out.rmse[k] = std::sqrt(sum[k] / out.trials_used);
    acc += out.rmse[k];
  }
  out.average = sum.empty() ? 0.0 : acc / static_cast<double>(sum.size());
  return out;
}

double trial_rms(const FilterTrace& trace, Quantity q) {
  const auto& e = q == Quantity::OrientationDeg ? trace.orientation_err_deg : trace.position_err_m;
  if (e.empty()) return 0.0;
  double s = 0.0;
  for (double x : e) s += x * x;
  return std::sqrt(s / static_cast<double>(e.size()));
}

ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, double value) {
  ScenarioConfig out = cfg;
  switch (cfg.sweep) {
    case SweepAxis::None: break;
    case SweepAxis::Landmarks: out.landmarks = static_cast<int>(std::lround(value)); break;
    case SweepAxis::Noise:
      if (cfg.sensor == SensorKind::Camera) {
        out.noise.sigma_camera = value;
      } else {
        out.noise.sigma_lidar = value;
      }
      break;
    case SweepAxis::InitScale: out.deviation_scale = value; break;
  }
  return out;
}

}  // namespace eikf
