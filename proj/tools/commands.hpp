#pragma once

#include "eikf/config.hpp"
#include "eikf/sim.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eikf::cli {

inline constexpr const char* kToolVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct RunOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> overrides;
};

struct BenchOptions {
  std::vector<int> n_list{1000, 10000, 100000};
  std::string sensor = "lidar";
  int reps = 5;
  std::vector<std::string> variants{"EIKF-C", "IEKF"};
  std::string out_path;  // empty: CSV goes to stdout
  std::uint64_t seed = 1;
};

/// Header of rmse_<quantity>.csv for the given filter order.
std::string rmse_csv_header(const std::vector<FilterVariant>& filters);
std::string sweep_csv_header();
std::string bench_csv_header(const std::vector<FilterVariant>& variants);

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);
int cmd_bench_update(const BenchOptions& opt, std::ostream& out, std::ostream& err);
int cmd_selftest(std::ostream& out);
void emit_default_config(std::ostream& out);

}  // namespace eikf::cli
