#include "clustersim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "json.hpp"

namespace clustersim {

std::vector<MatmulProblem> sample_sizes(std::uint32_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto draw = [&] { return static_cast<std::uint32_t>(8 * (1 + rng() % 16)); };
    std::vector<MatmulProblem> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        MatmulProblem p;
        p.M = draw();
        p.N = draw();
        p.K = draw();
        out.push_back(p);
    }
    return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) {
        return 0.0;
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxSummary box_summary(std::vector<double> values) {
    BoxSummary b;
    b.n = values.size();
    if (values.empty()) {
        return b;
    }
    std::sort(values.begin(), values.end());
    b.min = values.front();
    b.max = values.back();
    b.p25 = quantile_sorted(values, 0.25);
    b.median = quantile_sorted(values, 0.5);
    b.p75 = quantile_sorted(values, 0.75);
    const double iqr = b.p75 - b.p25;
    const double lo_fence = b.p25 - 1.5 * iqr;
    const double hi_fence = b.p75 + 1.5 * iqr;
    b.whisker_lo = b.max;
    b.whisker_hi = b.min;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
        } else {
            b.whisker_lo = std::min(b.whisker_lo, v);
            b.whisker_hi = std::max(b.whisker_hi, v);
        }
    }
    return b;
}

SweepResult sweep(const ClusterConfig& config, std::uint32_t n, std::uint64_t seed, unsigned jobs, bool end_to_end) {
    const auto sizes = sample_sizes(n, seed);
    SweepResult res;
    res.config = config.name;
    res.seed = seed;
    res.runs.resize(sizes.size());

    SimOptions opt;
    opt.end_to_end = end_to_end;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (auto i = next++; i < sizes.size(); i = next++) {
            try {
                res.runs[i] = {static_cast<std::uint32_t>(i), simulate(config, sizes[i], opt)};
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(sizes.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }

    std::sort(res.runs.begin(), res.runs.end(), [](const SweepRun& a, const SweepRun& b) {
        const auto& p = a.stats.problem;
        const auto& q = b.stats.problem;
        return std::tie(p.M, p.N, p.K, a.sample) < std::tie(q.M, q.N, q.K, b.sample);
    });
    std::vector<double> util;
    for (const auto& r : res.runs) util.push_back(r.stats.utilization);
    res.utilization = box_summary(util);
    return res;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<SweepResult>& results) {
    os << "config,sample,M,N,K,variant,tiles,cycles,end_to_end_cycles,utilization,busy,loop_overhead,"
          "conflict_stall,raw_stall,startup,region_conflicts,dma_busy_cycles\n";
    for (const auto& res : results) {
        for (const auto& run : res.runs) {
            const auto& s = run.stats;
            os << res.config << ',' << run.sample << ',' << s.problem.M << ',' << s.problem.N << ',' << s.problem.K
               << ',' << to_string(s.variant) << ',' << s.tiles << ',' << s.total_cycles << ','
               << s.end_to_end_cycles << ',' << fmt(s.utilization) << ',' << fmt(s.fraction(&CoreStats::busy))
               << ',' << fmt(s.fraction(&CoreStats::loop_overhead)) << ','
               << fmt(s.fraction(&CoreStats::conflict_stall)) << ',' << fmt(s.fraction(&CoreStats::raw_stall))
               << ',' << fmt(s.fraction(&CoreStats::startup)) << ',' << s.region_conflicts << ','
               << s.dma_busy_cycles << '\n';
        }
    }
}

std::string summary_json(const std::vector<SweepResult>& results) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& res : results) {
        const auto& b = res.utilization;
        std::uint64_t conflict_runs = 0;
        for (const auto& r : res.runs) {
            if (r.stats.cluster.conflict_stall > 0) ++conflict_runs;
        }
        j.push_back({{"config", res.config},
                     {"seed", res.seed},
                     {"n", b.n},
                     {"min", b.min},
                     {"p25", b.p25},
                     {"median", b.median},
                     {"p75", b.p75},
                     {"max", b.max},
                     {"whisker_lo", b.whisker_lo},
                     {"whisker_hi", b.whisker_hi},
                     {"outliers", b.outliers},
                     {"runs_with_conflict_stall", conflict_runs}});
    }
    return j.dump(2) + "\n";
}

void write_gnuplot(std::ostream& os, const std::vector<SweepResult>& results) {
    os << "# index config whisker_lo p25 median p75 whisker_hi\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& b = results[i].utilization;
        os << i << ' ' << results[i].config << ' ' << fmt(b.whisker_lo) << ' ' << fmt(b.p25) << ' ' << fmt(b.median)
           << ' ' << fmt(b.p75) << ' ' << fmt(b.whisker_hi) << '\n';
    }
}

void write_report(const std::filesystem::path& dir, const std::vector<SweepResult>& results) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write " + (dir / name).string());
        }
        return f;
    };
    {
        auto f = open("sweep.csv");
        write_csv(f, results);
    }
    {
        auto f = open("summary.json");
        f << summary_json(results);
    }
    {
        auto f = open("boxplot.dat");
        write_gnuplot(f, results);
    }
}

}  // namespace clustersim
