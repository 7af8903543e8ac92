#include "commands.hpp"

#include "eikf/bench.hpp"
#include "eikf/selftest.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace eikf;
using namespace eikf::cli;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("eikf_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const fs::path p = dir / "cfg.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

Json short_config() {
  Json j = to_json(ScenarioConfig{});
  j["duration"] = 1.0;
  j["trials"] = 2;
  return j;
}

}  // namespace

TEST(Headers, RmseCsv) {
  EXPECT_EQ(rmse_csv_header({FilterVariant::IEKF, FilterVariant::InEKF, FilterVariant::EIKF_I,
                             FilterVariant::EIKF_C}),
            "t,IEKF,InEKF,EIKF-I,EIKF-C");
}

TEST(Headers, SweepCsv) {
  EXPECT_EQ(sweep_csv_header(), "sweep_value,filter,avg_rmse_orient_deg,avg_rmse_pos_m,avg_update_ms");
}

TEST(Headers, BenchCsv) {
  EXPECT_EQ(bench_csv_header({FilterVariant::EIKF_C, FilterVariant::IEKF}),
            "n,EIKF-C_median_update_ms,IEKF_median_update_ms");
}

TEST(Run, MissingConfigExitsWithConfigCode) {
  RunOptions opt;
  opt.config_path = "/nonexistent/cfg.json";
  opt.out_dir = scratch("missing").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(opt, out, err), kExitConfig);
  EXPECT_FALSE(err.str().empty());
}

TEST(Run, UnknownKeyExitsWithConfigCode) {
  const fs::path dir = scratch("unknown");
  Json j = short_config();
  j["not_a_field"] = 1;
  RunOptions opt;
  opt.config_path = write_config(dir, j).string();
  opt.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(opt, out, err), kExitConfig);
}

TEST(Run, RepeatedRunsGiveIdenticalCsv) {
  const fs::path dir = scratch("repeat");
  Json j = short_config();
  j["trials"] = 5;
  const fs::path cfg = write_config(dir, j);
  std::string csv[2];
  for (int k = 0; k < 2; ++k) {
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_dir = (dir / ("out" + std::to_string(k))).string();
    opt.seed = 7;
    opt.overrides = {"trials=2"};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(opt, out, err), kExitOk) << err.str();
    csv[k] = slurp(fs::path(opt.out_dir) / "rmse_position_m.csv");
    const Json m = Json::parse(slurp(fs::path(opt.out_dir) / "manifest.json"));
    EXPECT_EQ(m["config"]["trials"], 2);
    EXPECT_EQ(m["seed"], 7);
  }
  EXPECT_FALSE(csv[0].empty());
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(csv[0].substr(0, csv[0].find('\n')), "t,IEKF,InEKF,EIKF-I,EIKF-C");
}

TEST(Run, ManifestReproducesRun) {
  const fs::path dir = scratch("manifest");
  RunOptions first;
  first.config_path = write_config(dir, short_config()).string();
  first.out_dir = (dir / "a").string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(first, out, err), kExitOk) << err.str();

  RunOptions again;
  again.config_path = (dir / "a" / "manifest.json").string();
  again.out_dir = (dir / "b").string();
  ASSERT_EQ(cmd_run(again, out, err), kExitOk) << err.str();
  EXPECT_EQ(slurp(dir / "a" / "rmse_orientation_deg.csv"),
            slurp(dir / "b" / "rmse_orientation_deg.csv"));
  const Json ma = Json::parse(slurp(dir / "a" / "manifest.json"));
  const Json mb = Json::parse(slurp(dir / "b" / "manifest.json"));
  EXPECT_EQ(ma["config_hash"], mb["config_hash"]);
}

TEST(Run, SweepWritesOneRowPerFilterAndValue) {
  const fs::path dir = scratch("sweep");
  Json j = short_config();
  j["trials"] = 1;
  j["sweep"] = {{"axis", "landmarks"}, {"values", {50, 100}}};
  RunOptions opt;
  opt.config_path = write_config(dir, j).string();
  opt.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(opt, out, err), kExitOk) << err.str();
  std::istringstream csv(slurp(dir / "out" / "sweep.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 1 + 2 * 4);
}

TEST(Bench, SingleSizeGivesNanExponent) {
  BenchOptions opt;
  opt.n_list = {200};
  opt.reps = 1;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_bench_update(opt, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("exponent EIKF-C nan"), std::string::npos) << out.str();
  EXPECT_NE(err.str().find("warning"), std::string::npos);
}

TEST(Bench, RejectsDescendingSizes) {
  BenchOptions opt;
  opt.n_list = {1000, 100};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_bench_update(opt, out, err), kExitRuntime);
}

TEST(Bench, LoglogSlope) {
  EXPECT_NEAR(loglog_slope({10, 100, 1000}, {3, 30, 300}), 1.0, 1e-12);
  EXPECT_NEAR(loglog_slope({10, 100}, {1, 100}), 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(loglog_slope({10}, {1})));
}

TEST(Selftest, DefaultSuitePasses) {
  std::ostringstream out;
  EXPECT_EQ(cmd_selftest(out), kExitOk) << out.str();
}

TEST(Selftest, CatchesSignFlippedJacobian) {
  SelftestOptions opt;
  const auto good = default_camera_jacobian();
  opt.camera_jacobian = [good](const ExtendedPose& X, const Extrinsics& e, const CameraIntrinsics& K,
                               const std::vector<CameraFeature>& f, const LandmarkMap& m) {
    return MatX(-good(X, e, K, f, m));
  };
  int failed = 0;
  for (const auto& r : run_selftest(opt)) failed += r.passed ? 0 : 1;
  EXPECT_GT(failed, 0);
}

TEST(Config, HashIgnoresKeyOrder) {
  const Json a = Json::parse(R"({"trials": 3, "seed": 9, "noise": {"sigma_g": 0.1, "sigma_a": 0.2}})");
  const Json b = Json::parse(R"({"noise": {"sigma_a": 0.2, "sigma_g": 0.1}, "seed": 9, "trials": 3})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_NE(config_hash(a), config_hash(Json::parse(R"({"trials": 4})")));
}

TEST(Config, JsonRoundTrip) {
  ScenarioConfig cfg;
  cfg.sensor = SensorKind::Lidar;
  cfg.landmarks = 321;
  cfg.noise.sigma_lidar = 0.05;
  cfg.filters = {FilterVariant::EKF, FilterVariant::EIKF_C};
  const ScenarioConfig back = config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(Config, OverrideDottedPath) {
  Json j = to_json(ScenarioConfig{});
  apply_override(j, "noise.sigma_camera=0.5");
  apply_override(j, "name=custom");
  const ScenarioConfig cfg = config_from_json(j);
  EXPECT_DOUBLE_EQ(cfg.noise.sigma_camera, 0.5);
  EXPECT_EQ(cfg.name, "custom");
}

TEST(Config, TypeMismatchThrows) {
  Json j = to_json(ScenarioConfig{});
  j["trials"] = "many";
  try {
    config_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Config, ShippedConfigsValidate) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(EIKF_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const ScenarioConfig cfg = config_from_json(load_config_json(entry.path().string()));
    EXPECT_NO_THROW(validate(cfg)) << entry.path();
    EXPECT_EQ(cfg.name, entry.path().stem().string());
    ++count;
  }
  EXPECT_GE(count, 2);
}
