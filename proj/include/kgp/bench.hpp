/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#ifndef KGP_BENCH_HPP
#define KGP_BENCH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgp/kernels.hpp"

namespace kgp {

/// Timing sweep over 1D spatial lattices of M points with N parameter
/// points and N_t times.
struct BenchOptions {
  std::vector<std::size_t> sizes{64, 128, 256, 512, 1024, 2048, 4096};
  std::size_t n_params = 4;
  std::size_t n_times = 8;
  /// Dense oracle timings only where N * M * N_t <= dense_cap.
  std::size_t dense_cap = 4096;
  /// Each timing is the fastest of this many runs.
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  KernelFamily family = KernelFamily::matern52;
};

struct BenchRow {
  std::size_t M = 0;
  std::size_t points = 0;
  double nlml_seconds = 0.0;
  double predict_seconds = 0.0;
  /// t(M) / t(M_prev), present when the previous size is M / 2.
  std::optional<double> nlml_ratio;
  std::optional<double> predict_ratio;
  std::optional<double> dense_seconds;
  std::optional<double> dense_ratio;
};

std::vector<BenchRow> run_bench(const BenchOptions& options);

/// Columns: M,points,grid_nlml_s,predict_s,ratio,predict_ratio,dense_nlml_s,dense_ratio.
/// Absent values are empty fields.
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Parses "64,128,256"; throws UsageError on malformed input.
std::vector<std::size_t> parse_sizes(const std::string& csv);

}  // namespace kgp

#endif  // KGP_BENCH_HPP
