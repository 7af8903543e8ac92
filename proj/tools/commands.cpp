#include "commands.hpp"

#include "eikf/bench.hpp"
#include "eikf/selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

namespace eikf::cli {

namespace {

std::string num(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct FilterSummary {
  std::optional<RmseSeries> orient;
  std::optional<RmseSeries> pos;
  double avg_update_ms = std::numeric_limits<double>::quiet_NaN();
};

FilterSummary summarize(const std::vector<TrialResult>& results, std::size_t k) {
  FilterSummary s;
  try {
    s.orient = rmse(results, k, Quantity::OrientationDeg);
    s.pos = rmse(results, k, Quantity::PositionM);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllDiverged) throw;
  }
  double total = 0.0;
  int updates = 0;
  for (const auto& r : results) {
    total += r.filters[k].update_ms_total;
    updates += r.filters[k].updates;
  }
  if (updates > 0) s.avg_update_ms = total / updates;
  return s;
}

void write_rmse_csv(const std::filesystem::path& path, const ScenarioConfig& cfg,
                    const std::vector<TrialResult>& results,
                    const std::vector<FilterSummary>& summaries, Quantity q) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::NumericalFailure, "cannot write " + path.string());
  f << rmse_csv_header(cfg.filters) << '\n';
  const auto& times = results.front().times;
  for (std::size_t j = 0; j < times.size(); ++j) {
    f << num(times[j]);
    for (const auto& s : summaries) {
      const auto& series = q == Quantity::OrientationDeg ? s.orient : s.pos;
      f << ',' << (series && j < series->rmse.size() ? num(series->rmse[j]) : "nan");
    }
    f << '\n';
  }
}

Json averages_json(const ScenarioConfig& cfg, const std::vector<FilterSummary>& summaries) {
  Json j = Json::object();
  for (std::size_t k = 0; k < summaries.size(); ++k) {
    const auto& s = summaries[k];
    j[to_string(cfg.filters[k])] = {
        {"avg_rmse_orient_deg", s.orient ? Json(s.orient->average) : Json(nullptr)},
        {"avg_rmse_pos_m", s.pos ? Json(s.pos->average) : Json(nullptr)},
        {"trials_used", s.pos ? s.pos->trials_used : 0},
        {"avg_update_ms", std::isfinite(s.avg_update_ms) ? Json(s.avg_update_ms) : Json(nullptr)}};
  }
  return j;
}

}  // namespace

std::string rmse_csv_header(const std::vector<FilterVariant>& filters) {
  std::string h = "t";
  for (auto v : filters) h += "," + to_string(v);
  return h;
}

std::string sweep_csv_header() {
  return "sweep_value,filter,avg_rmse_orient_deg,avg_rmse_pos_m,avg_update_ms";
}

std::string bench_csv_header(const std::vector<FilterVariant>& variants) {
  std::string h = "n";
  for (auto v : variants) h += "," + to_string(v) + "_median_update_ms";
  return h;
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  Json cfg_json;
  ScenarioConfig cfg;
  try {
    cfg_json = load_config_json(opt.config_path);
    for (const auto& o : opt.overrides) apply_override(cfg_json, o);
    if (opt.seed) cfg_json["seed"] = *opt.seed;
    cfg = config_from_json(cfg_json);
    cfg_json = to_json(cfg);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const std::string start = utc_now();
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    Json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = cfg_json;
    manifest["config_hash"] = config_hash(cfg_json);
    manifest["seed"] = cfg.seed;
    manifest["start_time"] = start;
    Json outputs = Json::array();

    if (cfg.sweep == SweepAxis::None) {
      const auto results = run_scenario(cfg, opt.jobs);
      std::vector<FilterSummary> summaries;
      for (std::size_t k = 0; k < cfg.filters.size(); ++k) summaries.push_back(summarize(results, k));
      write_rmse_csv(dir / "rmse_orientation_deg.csv", cfg, results, summaries,
                     Quantity::OrientationDeg);
      write_rmse_csv(dir / "rmse_position_m.csv", cfg, results, summaries, Quantity::PositionM);
      outputs.push_back((dir / "rmse_orientation_deg.csv").string());
      outputs.push_back((dir / "rmse_position_m.csv").string());
      manifest["results"] = averages_json(cfg, summaries);
      for (std::size_t k = 0; k < summaries.size(); ++k) {
        out << to_string(cfg.filters[k]) << ": avg RMSE orientation "
            << (summaries[k].orient ? num(summaries[k].orient->average) : "diverged") << " deg, position "
            << (summaries[k].pos ? num(summaries[k].pos->average) : "diverged") << " m\n";
      }
    } else {
      std::ofstream f(dir / "sweep.csv");
      if (!f) throw Error(ErrorCode::NumericalFailure, "cannot write sweep.csv");
      f << sweep_csv_header() << '\n';
      Json sweep = Json::array();
      for (double value : cfg.sweep_values) {
        const ScenarioConfig cv = with_sweep_value(cfg, value);
        const auto results = run_scenario(cv, opt.jobs);
        std::vector<FilterSummary> summaries;
        for (std::size_t k = 0; k < cv.filters.size(); ++k) {
          summaries.push_back(summarize(results, k));
          const auto& s = summaries.back();
          f << num(value) << ',' << to_string(cv.filters[k]) << ','
            << (s.orient ? num(s.orient->average) : "nan") << ','
            << (s.pos ? num(s.pos->average) : "nan") << ',' << num(s.avg_update_ms) << '\n';
        }
        sweep.push_back({{"value", value}, {"results", averages_json(cv, summaries)}});
        out << to_string(cfg.sweep) << " = " << num(value) << " done\n";
      }
      outputs.push_back((dir / "sweep.csv").string());
      manifest["sweep"] = sweep;
    }
    manifest["end_time"] = utc_now();
    outputs.push_back((dir / "manifest.json").string());
    manifest["outputs"] = outputs;
    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_bench_update(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    std::vector<FilterVariant> variants;
    for (const auto& v : opt.variants) variants.push_back(filter_variant_from_string(v));
    if (opt.sensor != "lidar" && opt.sensor != "camera") {
      throw Error(ErrorCode::ConfigError, "sensor must be 'lidar' or 'camera'");
    }
    for (std::size_t i = 1; i < opt.n_list.size(); ++i) {
      if (opt.n_list[i] <= opt.n_list[i - 1]) {
        throw Error(ErrorCode::ConfigError, "n list must be ascending");
      }
    }
    const SensorKind sensor = opt.sensor == "lidar" ? SensorKind::Lidar : SensorKind::Camera;
    const auto rows = bench_update(opt.n_list, sensor, opt.reps, variants, opt.seed);

    std::ofstream file;
    if (!opt.out_path.empty()) {
      file.open(opt.out_path);
      if (!file) throw Error(ErrorCode::NumericalFailure, "cannot write " + opt.out_path);
    }
    std::ostream& csv = opt.out_path.empty() ? out : file;
    csv << bench_csv_header(variants) << '\n';
    for (std::size_t i = 0; i < opt.n_list.size(); ++i) {
      csv << opt.n_list[i];
      for (std::size_t k = 0; k < variants.size(); ++k) {
        csv << ',' << num(rows[i * variants.size() + k].median_ms);
      }
      csv << '\n';
    }
    if (opt.n_list.size() < 2) err << "warning: a single n gives no slope\n";
    for (std::size_t k = 0; k < variants.size(); ++k) {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < opt.n_list.size(); ++i) {
        x.push_back(opt.n_list[i]);
        y.push_back(rows[i * variants.size() + k].median_ms);
      }
      out << "exponent " << to_string(variants[k]) << ' ' << num(loglog_slope(x, y)) << '\n';
    }
  } catch (const std::exception& e) {
    err << "bench error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_selftest(std::ostream& out) {
  const auto results = run_selftest();
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "ok   " : "FAIL ") << r.name << "  " << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  out << (failed == 0 ? "all properties hold" : std::to_string(failed) + " properties failed") << '\n';
  return failed == 0 ? kExitOk : kExitFailure;
}

void emit_default_config(std::ostream& out) { out << to_json(ScenarioConfig{}).dump(2) << '\n'; }

}  // namespace eikf::cli
