#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace eikf::cli;
  CLI::App app{"Invariant filters on SE2(3) for visual- and LiDAR-inertial odometry"};
  app.require_subcommand(0, 1);

  bool emit_config = false;
  app.add_flag("--emit-default-config", emit_config, "Print the default configuration and exit");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a Monte-Carlo scenario or sweep");
  run_cmd->add_option("config", run.config_path, "JSON config or run manifest")->required();
  run_cmd->add_option("--out", run.out_dir, "Output directory");
  run_cmd->add_option("--seed", run.seed, "Master seed (overrides the config)");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--override", run.overrides, "Dotted key=value assignment")
      ->allow_extra_args(false);

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench-update", "Time one update across batch sizes");
  bench_cmd->add_option("--n", bench.n_list, "Ascending batch sizes")->delimiter(',');
  bench_cmd->add_option("--sensor", bench.sensor, "lidar or camera");
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--variants", bench.variants, "Filter variants")->delimiter(',');
  bench_cmd->add_option("--out", bench.out_path, "CSV path (default stdout)");
  bench_cmd->add_option("--seed", bench.seed, "Seed");

  auto* self_cmd = app.add_subcommand("selftest", "Run the fast property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (emit_config) {
    emit_default_config(std::cout);
    return kExitOk;
  }
  if (*run_cmd) return cmd_run(run, std::cout, std::cerr);
  if (*bench_cmd) return cmd_bench_update(bench, std::cout, std::cerr);
  if (*self_cmd) return cmd_selftest(std::cout);
  std::cout << app.help();
  return kExitConfig;
}
