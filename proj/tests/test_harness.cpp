#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "json.hpp"

#include "clustersim/config_file.hpp"
#include "clustersim/sweep.hpp"

using namespace clustersim;

namespace {

// Oracle: linear interpolation between closest ranks (R type 7), written
// from the definition h = (n-1)p.
double q7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

SweepResult synthetic(const std::string& name, std::uint32_t n) {
    SweepResult r;
    r.config = name;
    r.seed = 1;
    std::vector<double> u;
    for (std::uint32_t i = 0; i < n; ++i) {
        SweepRun run;
        run.sample = i;
        run.stats.config = name;
        run.stats.problem = MatmulProblem{8 * (1 + i % 16), 8, 8};
        run.stats.total_cycles = 1000;
        run.stats.utilization = 0.5 + 0.01 * i;
        u.push_back(run.stats.utilization);
        r.runs.push_back(run);
    }
    r.utilization = box_summary(u);
    return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("presets") {
    CHECK(ClusterConfig::preset_names().size() == 5);
    auto b = ClusterConfig::preset("Base32fc");
    CHECK(b.sequencer == SequencerKind::BaseFrep);
    CHECK(b.kernel_variant() == KernelVariant::BaselineLoop);
    CHECK(b.tcdm == TcdmConfig::fc32());
    auto z = ClusterConfig::preset("zonl48db");
    CHECK(z.kernel_variant() == KernelVariant::ZonlNest);
    CHECK(z.tcdm == TcdmConfig::dobu48());
    CHECK_THROWS_AS(ClusterConfig::preset("Zonl16"), ConfigError);
    auto bad = b;
    bad.kernel = KernelVariant::ZonlNest;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("size sampling") {
    auto s = sample_sizes(200, 5);
    CHECK(s.size() == 200);
    for (const auto& p : s) {
        for (auto d : {p.M, p.N, p.K}) {
            CHECK(d % 8 == 0);
            CHECK(d >= 8);
            CHECK(d <= 128);
        }
    }
    std::mt19937_64 rng(5);
    const auto m = static_cast<std::uint32_t>(8 * (1 + rng() % 16));
    const auto n = static_cast<std::uint32_t>(8 * (1 + rng() % 16));
    const auto k = static_cast<std::uint32_t>(8 * (1 + rng() % 16));
    CHECK(s[0].M == m);
    CHECK(s[0].N == n);
    CHECK(s[0].K == k);
    CHECK(sample_sizes(10, 5)[3].to_string() == s[3].to_string());
}

TEST_CASE("quantiles match the closest-rank interpolation oracle") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> v(1 + rng() % 40);
        for (auto& x : v) x = static_cast<double>(rng() % 1000) / 7.0;
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
            CHECK(quantile_sorted(sorted, p) == doctest::Approx(q7(v, p)));
        }
    }
    auto b = box_summary({1, 2, 3, 4, 5, 6, 7, 8, 9, 100});
    CHECK(b.median == doctest::Approx(5.5));
    CHECK(b.outliers == std::vector<double>{100});
    CHECK(b.whisker_hi == 9);
    CHECK(b.whisker_lo == 1);
}

TEST_CASE("CSV layout") {
    std::ostringstream empty;
    write_csv(empty, {});
    CHECK(count_lines(empty.str()) == 1);
    CHECK(empty.str().rfind("config,sample,M,N,K,", 0) == 0);

    std::vector<SweepResult> five;
    for (const auto& n : ClusterConfig::preset_names()) five.push_back(synthetic(n, 50));
    std::ostringstream os;
    write_csv(os, five);
    CHECK(count_lines(os.str()) == 251);

    auto j = nlohmann::json::parse(summary_json(five));
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 5);
    CHECK(j[0]["config"] == "Base32fc");
    CHECK(j[0]["median"].get<double>() == doctest::Approx(five[0].utilization.median));
    std::ostringstream gp;
    write_gnuplot(gp, five);
    CHECK(count_lines(gp.str()) >= 5);
}

TEST_CASE("simulation is deterministic and accounting closes") {
    const auto cfg = ClusterConfig::base32fc();
    const MatmulProblem p{24, 40, 16};
    auto a = simulate(cfg, p);
    auto b = simulate(cfg, p);
    CHECK(a.total_cycles == b.total_cycles);
    CHECK(a.cluster.busy == b.cluster.busy);
    CHECK(a.region_conflicts == b.region_conflicts);
    CHECK(a.accounting_closed());
    CHECK(a.utilization > 0.0);
    CHECK(a.utilization < 1.0);

    SimOptions e2e;
    e2e.end_to_end = true;
    auto c = simulate(cfg, p, e2e);
    CHECK(c.accounting_closed());
    CHECK(c.total_cycles == a.end_to_end_cycles);
    CHECK(c.utilization < a.utilization);
}

TEST_CASE("threaded sweep equals the serial one") {
    auto s1 = sweep(ClusterConfig::zonl64fc(), 6, 3, 1);
    auto s3 = sweep(ClusterConfig::zonl64fc(), 6, 3, 3);
    std::ostringstream a;
    std::ostringstream b;
    write_csv(a, {s1});
    write_csv(b, {s3});
    CHECK(a.str() == b.str());
}

TEST_CASE("conflict-free configs: cycles follow a per-tile model") {
    // Each tile costs the per-core compute plus a small fixed overhead
    // (stream configuration, pipeline fill and drain, barrier).
    for (const auto& name : {"Zonl48dobu", "Zonl64dobu"}) {
        for (const auto& p : sample_sizes(12, 21)) {
            auto st = simulate(ClusterConfig::preset(name), p);
            std::uint64_t compute = 0;
            for (const auto& c : st.per_core) compute = std::max(compute, c.busy);
            CAPTURE(name);
            CAPTURE(p.to_string());
            CHECK(st.cluster.conflict_stall == 0);
            CHECK(st.cluster.raw_stall == 0);
            CHECK(st.cluster.loop_overhead == 0);
            CHECK(st.total_cycles >= compute);
            CHECK(st.total_cycles - compute <= 16ULL * st.tiles);
        }
    }
}

TEST_CASE("YAML configuration files") {
    auto cfg = parse_config_yaml("preset: Zonl48dobu\nname: test\nfpu_latency: 4\nstreams:\n  read_queue_depth: 6\n");
    CHECK(cfg.name == "test");
    CHECK(cfg.fpu_latency == 4);
    CHECK(cfg.streams.read_queue_depth == 6);
    CHECK(cfg.tcdm == TcdmConfig::dobu48());

    auto back = parse_config_yaml(to_yaml(cfg));
    CHECK(back.name == cfg.name);
    CHECK(back.tcdm == cfg.tcdm);
    CHECK(back.fpu_latency == cfg.fpu_latency);
    CHECK(back.kernel_variant() == cfg.kernel_variant());
    CHECK(back.streams.read_queue_depth == 6);

    CHECK_THROWS_AS(parse_config_yaml("fpu_latncy: 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_yaml("sequencer: fancy\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_yaml("unroll: [1, 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_yaml("tcdm:\n  n_banks: -3\n"), ConfigError);
    CHECK_THROWS_AS(resolve_config("/nonexistent/cluster.yaml"), ConfigError);
    CHECK(resolve_config("Base32fc").name == "Base32fc");
}

}
