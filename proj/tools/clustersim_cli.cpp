// clustersim command-line front end.
//
//   clustersim simulate --config Zonl48dobu --size 32x32x32 [--functional]
//   clustersim sweep    --config Base32fc --config Zonl32fc --n 50 --seed 1 --out results/
//   clustersim trace    --config Base32fc --size 32x32x32 --kind conflicts --out trace.csv
//   clustersim dump     --config Zonl48dobu --size 32x32x32 [--tile 0] [--core 0]
//   clustersim config   --config Zonl48dobu

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "clustersim/cluster.hpp"
#include "clustersim/config_file.hpp"
#include "clustersim/kernels.hpp"
#include "clustersim/sweep.hpp"

using namespace clustersim;

namespace {

std::ostream* open_out(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty() || path == "-") {
        return &std::cout;
    }
    holder = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*holder) {
        throw ConfigError("cannot write " + path);
    }
    return holder.get();
}

nlohmann::ordered_json stats_json(const RunStats& s) {
    nlohmann::ordered_json j;
    j["config"] = s.config;
    j["size"] = s.problem.to_string();
    j["variant"] = to_string(s.variant);
    j["tiles"] = s.tiles;
    j["cycles"] = s.total_cycles;
    j["end_to_end_cycles"] = s.end_to_end_cycles;
    j["utilization"] = s.utilization;
    j["breakdown"] = {{"busy", s.fraction(&CoreStats::busy)},
                      {"loop_overhead", s.fraction(&CoreStats::loop_overhead)},
                      {"conflict_stall", s.fraction(&CoreStats::conflict_stall)},
                      {"raw_stall", s.fraction(&CoreStats::raw_stall)},
                      {"startup", s.fraction(&CoreStats::startup)}};
    auto cores = nlohmann::ordered_json::array();
    for (const auto& c : s.per_core) {
        cores.push_back({{"busy", c.busy},
                         {"loop_overhead", c.loop_overhead},
                         {"conflict_stall", c.conflict_stall},
                         {"raw_stall", c.raw_stall},
                         {"startup", c.startup}});
    }
    j["per_core"] = cores;
    j["conflicts"] = {{"total", s.total_conflicts}, {"measured_region", s.region_conflicts}};
    j["conflicts_per_bank"] = s.conflicts_per_bank;
    j["dma"] = {{"busy_cycles", s.dma_busy_cycles}, {"beats", s.dma_beats}, {"conflicts", s.dma_conflicts}};
    if (s.functional) {
        j["functional"] = {{"max_abs_error", s.max_abs_error}, {"bitwise_equal", s.bitwise_equal}};
    }
    return j;
}

void print_stats(const RunStats& s) {
    std::printf("config        %s\n", s.config.c_str());
    std::printf("size          %s (%u tiles, %s)\n", s.problem.to_string().c_str(), s.tiles,
                to_string(s.variant).c_str());
    std::printf("cycles        %llu measured, %llu end to end\n", static_cast<unsigned long long>(s.total_cycles),
                static_cast<unsigned long long>(s.end_to_end_cycles));
    std::printf("utilization   %.4f\n", s.utilization);
    std::printf("  busy           %.4f\n", s.fraction(&CoreStats::busy));
    std::printf("  loop_overhead  %.4f\n", s.fraction(&CoreStats::loop_overhead));
    std::printf("  conflict_stall %.4f\n", s.fraction(&CoreStats::conflict_stall));
    std::printf("  raw_stall      %.4f\n", s.fraction(&CoreStats::raw_stall));
    std::printf("  startup        %.4f\n", s.fraction(&CoreStats::startup));
    std::printf("conflicts     %llu (%llu in measured region)\n", static_cast<unsigned long long>(s.total_conflicts),
                static_cast<unsigned long long>(s.region_conflicts));
    std::printf("dma           %llu beats, %llu busy cycles, %llu conflicts\n",
                static_cast<unsigned long long>(s.dma_beats), static_cast<unsigned long long>(s.dma_busy_cycles),
                static_cast<unsigned long long>(s.dma_conflicts));
    if (s.functional) {
        std::printf("functional    max |err| = %g, bitwise %s\n", s.max_abs_error, s.bitwise_equal ? "equal" : "DIFFERENT");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-level simulator of an 8-core shared-L1 cluster running double-buffered matmul"};
    app.require_subcommand(1);

    std::string config = "Zonl48dobu";
    std::string size = "32x32x32";
    std::optional<std::uint64_t> seed;
    std::string trace_path;
    bool functional = false;
    bool end_to_end = false;
    bool as_json = false;
    std::string variant;

    auto* sim = app.add_subcommand("simulate", "Run one problem on one configuration");
    sim->add_option("--config", config, "Preset name or YAML file")->capture_default_str();
    sim->add_option("--size", size, "Problem size MxNxK")->capture_default_str();
    sim->add_option("--seed", seed, "Seed for the functional input data");
    sim->add_option("--trace", trace_path, "Write the bank-conflict trace (CSV) to this file");
    sim->add_option("--variant", variant, "Kernel override: baseline-loop | inner-frep | zonl-nest");
    sim->add_flag("--functional", functional, "Move real FP64 data and check C against the reference");
    sim->add_flag("--end-to-end", end_to_end, "Include prologue/epilogue DMA in the measured region");
    sim->add_flag("--json", as_json, "Print the run statistics as JSON");

    std::vector<std::string> sweep_configs;
    std::uint32_t n = 50;
    std::uint64_t sweep_seed = 1;
    std::string out_dir = "sweep_out";
    unsigned jobs = std::max(1U, std::thread::hardware_concurrency());
    auto* sw = app.add_subcommand("sweep", "Random-size sweep with CSV/JSON/box-plot reports");
    sw->add_option("--config", sweep_configs, "Preset or YAML file, repeatable (default: all presets)");
    sw->add_option("--n", n, "Number of sampled sizes")->capture_default_str();
    sw->add_option("--seed", sweep_seed, "Sampling seed")->capture_default_str();
    sw->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sw->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
    sw->add_flag("--end-to-end", end_to_end, "Include prologue/epilogue DMA in the measured region");

    std::string kind = "conflicts";
    std::string out_path;
    auto* tr = app.add_subcommand("trace", "Per-cycle trace of one run");
    tr->add_option("--config", config, "Preset name or YAML file")->capture_default_str();
    tr->add_option("--size", size, "Problem size MxNxK")->capture_default_str();
    tr->add_option("--kind", kind, "conflicts | sequencer")
        ->check(CLI::IsMember({"conflicts", "sequencer"}))
        ->capture_default_str();
    tr->add_option("--out", out_path, "Output file (default stdout)");

    std::uint32_t tile = 0;
    std::uint32_t core = 0;
    auto* dump = app.add_subcommand("dump", "Print the kernel of one core for one tile");
    dump->add_option("--config", config, "Preset name or YAML file")->capture_default_str();
    dump->add_option("--size", size, "Problem size MxNxK")->capture_default_str();
    dump->add_option("--tile", tile, "Tile index")->capture_default_str();
    dump->add_option("--core", core, "Core index")->capture_default_str();
    dump->add_option("--variant", variant, "Kernel override");

    auto* show = app.add_subcommand("config", "Print a configuration as YAML");
    show->add_option("--config", config, "Preset name or YAML file")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            auto cfg = resolve_config(config);
            if (seed) cfg.seed = *seed;
            if (!variant.empty()) cfg.kernel = parse_variant(variant);
            SimOptions opt;
            opt.functional = functional;
            opt.end_to_end = end_to_end;
            std::unique_ptr<std::ofstream> holder;
            if (!trace_path.empty()) {
                auto* os = open_out(trace_path, holder);
                *os << "cycle,bank,winner,n_losers\n";
                opt.conflict_trace = [os](const ConflictTraceRecord& r) {
                    *os << r.cycle << ',' << r.bank << ',' << to_string(r.winner) << ',' << r.n_losers << '\n';
                };
            }
            const auto st = simulate(cfg, parse_size(size), opt);
            if (as_json) {
                std::cout << stats_json(st).dump(2) << '\n';
            } else {
                print_stats(st);
            }
            return functional && !st.bitwise_equal ? 2 : 0;
        }
        if (*sw) {
            if (sweep_configs.empty()) {
                sweep_configs = ClusterConfig::preset_names();
            }
            std::vector<SweepResult> results;
            for (const auto& c : sweep_configs) {
                results.push_back(sweep(resolve_config(c), n, sweep_seed, jobs, end_to_end));
                const auto& b = results.back().utilization;
                std::printf("%-12s median %.4f  [%.4f, %.4f]  whiskers [%.4f, %.4f]  outliers %zu\n",
                            results.back().config.c_str(), b.median, b.min, b.max, b.whisker_lo, b.whisker_hi,
                            b.outliers.size());
            }
            write_report(out_dir, results);
            std::printf("wrote %s/{sweep.csv,summary.json,boxplot.dat}\n", out_dir.c_str());
            return 0;
        }
        if (*tr) {
            const auto cfg = resolve_config(config);
            std::unique_ptr<std::ofstream> holder;
            auto* os = open_out(out_path, holder);
            SimOptions opt;
            if (kind == "conflicts") {
                *os << "cycle,bank,winner,n_losers\n";
                opt.conflict_trace = [os](const ConflictTraceRecord& r) {
                    *os << r.cycle << ',' << r.bank << ',' << to_string(r.winner) << ',' << r.n_losers << '\n';
                };
            } else {
                *os << "cycle,core,raddr,loop_idx,bypass,inst\n";
                opt.sequencer_trace = [os](std::uint32_t c, const SequencerTraceRecord& r) {
                    *os << r.cycle << ',' << c << ',' << r.raddr << ',' << r.loop_idx << ',' << (r.bypass ? 1 : 0)
                        << ",\"" << to_asm(r.inst) << "\"\n";
                };
            }
            simulate(cfg, parse_size(size), opt);
            return 0;
        }
        if (*dump) {
            auto cfg = resolve_config(config);
            if (!variant.empty()) cfg.kernel = parse_variant(variant);
            auto p = parse_size(size);
            p.unroll = cfg.unroll;
            p.tile_m = cfg.n_cores;
            const auto sched = gen_schedule(p, cfg.tcdm, cfg.n_cores);
            if (tile >= sched.tiles.size()) {
                throw ConfigError("tile index out of range (" + std::to_string(sched.tiles.size()) + " tiles)");
            }
            const BufferLayout layout(cfg.tcdm);
            const auto& t = sched.tiles[tile];
            const auto k = gen_kernel(t, core, p.K, layout, cfg.kernel_variant());
            std::printf("# %s %s tile %u (rows %u..%u, cols %u..%u, buffer %d) core %u\n", cfg.name.c_str(),
                        p.to_string().c_str(), tile, t.m0, t.m0 + t.rows - 1, t.n0, t.n0 + t.tn - 1, t.buffer, core);
            auto prog = std::vector<Instruction>{make::ssr_cfg(StreamId::S0, k.a), make::ssr_cfg(StreamId::S1, k.b),
                                                 make::ssr_cfg(StreamId::S2, k.c)};
            prog.insert(prog.end(), k.body.begin(), k.body.end());
            prog.push_back(make::barrier());
            for (const auto& [name, sc] : {std::pair{"ft0", &k.a}, std::pair{"ft1", &k.b}, std::pair{"ft2", &k.c}}) {
                std::printf("# %s base 0x%llx", name, static_cast<unsigned long long>(sc->base));
                for (const auto& d : sc->dims) {
                    std::printf(" [%u x %lld]", d.bound, static_cast<long long>(d.stride));
                }
                std::printf("\n");
            }
            std::fputs(dump_kernel(prog).c_str(), stdout);
            return 0;
        }
        if (*show) {
            std::cout << to_yaml(resolve_config(config));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const IntegrityFault& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}
