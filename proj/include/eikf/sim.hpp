#pragma once

#include "eikf/filter.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace eikf {

struct TrajectorySpec {
  Vec3 amplitude{70.0, 80.0, 7.0};
  double freq_xy = 0.15;
  double freq_z = 0.75;
  /// Use 80 sin instead of 80 cos for the y component.
  bool y_uses_sin = false;
  Vec3 body_rate{0.2, 0.3, 0.1};
};

struct GroundTruthSample {
  ExtendedPose X;
  Vec3 omega = Vec3::Zero();  // body rate
  Vec3 accel = Vec3::Zero();  // world-frame acceleration
};

/// Initial attitude that sends the body rotation axis to world +x.
Mat3 initial_attitude(const TrajectorySpec& spec);
GroundTruthSample ground_truth(double t, const TrajectorySpec& spec);

enum class SensorKind { Camera, Lidar };
enum class SweepAxis { None, Landmarks, Noise, InitScale };

std::string to_string(SensorKind s);
std::string to_string(SweepAxis s);

/// Axis-aligned box of camera landmarks.
struct LandmarkBox {
  Vec3 lo{150.0, -100.0, -60.0};
  Vec3 hi{250.0, 100.0, 60.0};
};

/// Room of six walls plus random plane patches near the trajectory.
struct PlaneSceneSpec {
  Vec3 room_half_extent{150.0, 150.0, 30.0};
  double patch_min_range = 10.0;
  double patch_max_range = 50.0;
  double patch_half_size = 2.0;
};

struct ScenarioConfig {
  std::string name = "vio_default";
  SensorKind sensor = SensorKind::Camera;
  double duration = 30.0;
  double imu_rate = 100.0;
  double cam_rate = 20.0;
  double lidar_rate = 50.0;
  TrajectorySpec trajectory;
  int landmarks = 100;
  LandmarkBox landmark_box;
  PlaneSceneSpec planes;
  double min_depth = 0.1;
  NoiseParams noise;
  Vec3 init_position_dev{0.5, 0.5, 0.5};
  Vec3 init_rpy_dev{M_PI / 6, M_PI / 6, -M_PI / 6};
  double deviation_scale = 1.0;
  /// Initial filter standard deviations: attitude (rad), position, velocity, biases.
  double init_sigma_theta = M_PI / 6;
  double init_sigma_p = 0.5;
  double init_sigma_v = 0.1;
  double init_sigma_bg = 0.01;
  double init_sigma_ba = 0.01;
  std::vector<FilterVariant> filters{FilterVariant::IEKF, FilterVariant::InEKF,
                                     FilterVariant::EIKF_I, FilterVariant::EIKF_C};
  int trials = 100;
  std::uint64_t seed = 1;
  SweepAxis sweep = SweepAxis::None;
  std::vector<double> sweep_values;
  UpdateConfig update;
  Vec3 gravity{0.0, 0.0, -9.81};
  CameraIntrinsics intrinsics;
  double divergence_threshold = 1e3;
};

/// Throws ConfigError on inconsistent settings.
void validate(const ScenarioConfig& cfg);
int imu_per_update(const ScenarioConfig& cfg);
double sensor_rate(const ScenarioConfig& cfg);
/// Camera looks along the body rotation axis; LiDAR coincides with the IMU.
Extrinsics default_extrinsics(const TrajectorySpec& spec);

/// Per-trial generator seeded from (master, trial).
std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t stream = 0);

std::vector<Landmark> make_landmarks(const ScenarioConfig& cfg, std::mt19937_64& rng);

struct Plane {
  Vec3 q = Vec3::Zero();  // anchor point
  Vec3 u = Vec3::UnitZ();  // unit normal
  Vec3 e1 = Vec3::UnitX();  // in-plane basis
  Vec3 e2 = Vec3::UnitY();
  bool unbounded = false;  // walls: sample around the sensor's projection
};
std::vector<Plane> make_planes(const ScenarioConfig& cfg, std::mt19937_64& rng);

/// IMU samples at t_k = k / imu_rate for k < duration * imu_rate.
std::vector<ImuSample> synthesize_imu(const ScenarioConfig& cfg, std::mt19937_64& rng);

CameraBatch synthesize_camera(const ScenarioConfig& cfg, const Extrinsics& ext,
                              const std::vector<Landmark>& landmarks, double t,
                              std::mt19937_64& rng);
LidarBatch synthesize_lidar(const ScenarioConfig& cfg, const Extrinsics& ext,
                            const std::vector<Plane>& planes, double t, std::mt19937_64& rng);

struct FilterTrace {
  FilterVariant variant = FilterVariant::EIKF_C;
  std::vector<double> orientation_err_deg;
  std::vector<double> position_err_m;
  double update_ms_total = 0.0;
  int updates = 0;
  bool diverged = false;
};

struct TrialResult {
  std::vector<double> times;  // update instants
  std::vector<FilterTrace> filters;
  double initial_position_dev = 0.0;
};

/// Geodesic angle between two rotations, in degrees.
double orientation_error_deg(const Mat3& R_est, const Mat3& R_true);

TrialResult run_trial(const ScenarioConfig& cfg, int trial);
/// Runs all trials on up to `jobs` threads; results are ordered by trial index.
std::vector<TrialResult> run_scenario(const ScenarioConfig& cfg, int jobs = 1);

enum class Quantity { OrientationDeg, PositionM };

struct RmseSeries {
  std::vector<double> t;
  std::vector<double> rmse;
  double average = 0.0;
  int trials_used = 0;
};

/// RMSE across non-diverged trials for the filter at `filter_index`. Throws AllDiverged.
RmseSeries rmse(const std::vector<TrialResult>& results, std::size_t filter_index, Quantity q);

/// Root mean square over time of one trial's error trace.
double trial_rms(const FilterTrace& trace, Quantity q);

/// Applies a sweep value to the swept field.
ScenarioConfig with_sweep_value(const ScenarioConfig& cfg, double value);

}  // namespace eikf
