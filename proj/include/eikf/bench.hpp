#pragma once

#include "eikf/filter.hpp"
#include "eikf/sim.hpp"

#include <cstdint>
#include <vector>

namespace eikf {

struct BenchRow {
  int n = 0;
  FilterVariant variant = FilterVariant::EIKF_C;
  double median_ms = 0.0;
};

/// Median wall time of a single update on synthetic batches of each size.
std::vector<BenchRow> bench_update(const std::vector<int>& n_list, SensorKind sensor, int reps,
                                   const std::vector<FilterVariant>& variants,
                                   std::uint64_t seed = 1);

/// Least-squares slope of log(y) against log(x); NaN with fewer than two points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace eikf
