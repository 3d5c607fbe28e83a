#pragma once

// Random-size experiment sweep and report emission.
//
// Sizes: M, N, K drawn independently and uniformly from {8, 16, ..., 128}
// with std::mt19937_64 seeded by the user; each draw is 8 * (1 + x % 16)
// for the next 64-bit output x, in the order M, N, K.
//
// CSV columns (fixed order):
//   config,sample,M,N,K,variant,tiles,cycles,end_to_end_cycles,
//   utilization,busy,loop_overhead,conflict_stall,raw_stall,startup,
//   region_conflicts,dma_busy_cycles
// Fractions are means over compute cores of cycles / measured cycles.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "clustersim/cluster.hpp"

namespace clustersim {

std::vector<MatmulProblem> sample_sizes(std::uint32_t n, std::uint64_t seed);

/// Type-7 quantile of sorted data, p in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double p);

struct BoxSummary {
    std::size_t n = 0;
    double min = 0, p25 = 0, median = 0, p75 = 0, max = 0;
    double whisker_lo = 0, whisker_hi = 0;  ///< extreme values inside 1.5 IQR fences
    std::vector<double> outliers;
};

BoxSummary box_summary(std::vector<double> values);

struct SweepRun {
    std::uint32_t sample = 0;
    RunStats stats;
};

struct SweepResult {
    std::string config;
    std::uint64_t seed = 0;
    std::vector<SweepRun> runs;  ///< sorted by (M, N, K, sample)
    BoxSummary utilization;
};

/// Simulates every sampled size. `jobs` > 1 runs sizes on worker threads;
/// the result does not depend on it.
SweepResult sweep(const ClusterConfig& config, std::uint32_t n, std::uint64_t seed, unsigned jobs = 1,
                  bool end_to_end = false);

void write_csv(std::ostream& os, const std::vector<SweepResult>& results);
std::string summary_json(const std::vector<SweepResult>& results);
/// One line per config: index, name, whisker_lo, p25, median, p75,
/// whisker_hi (gnuplot candlesticks order).
void write_gnuplot(std::ostream& os, const std::vector<SweepResult>& results);

/// Writes sweep.csv, summary.json and boxplot.dat into `dir`, creating
/// it if needed. Throws ConfigError if the files cannot be written.
void write_report(const std::filesystem::path& dir, const std::vector<SweepResult>& results);

}  // namespace clustersim
