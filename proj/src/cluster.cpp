#include "clustersim/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

namespace clustersim {

std::string to_string(SequencerKind k) { return k == SequencerKind::BaseFrep ? "base" : "zonl"; }

SequencerKind parse_sequencer_kind(const std::string& s) {
    if (s == "base" || s == "BaseFrep") return SequencerKind::BaseFrep;
    if (s == "zonl" || s == "ZonlFrep") return SequencerKind::ZonlFrep;
    throw ConfigError("unknown sequencer kind '" + s + "'");
}

KernelVariant ClusterConfig::kernel_variant() const {
    if (kernel) {
        return *kernel;
    }
    return sequencer == SequencerKind::BaseFrep ? KernelVariant::BaselineLoop : KernelVariant::ZonlNest;
}

CoreParams ClusterConfig::core_params() const {
    CoreParams p;
    p.fpu_latency = fpu_latency;
    p.branch_penalty = branch_penalty;
    p.sequencer.capacity = ring_capacity;
    p.sequencer.max_depth = sequencer == SequencerKind::BaseFrep ? 1 : static_cast<int>(zonl_depth);
    p.streams = streams;
    return p;
}

void ClusterConfig::validate() const {
    tcdm.validate();
    if (n_cores == 0 || n_cores > 8) {
        throw ConfigError("n_cores must be in 1..8 (one lane of the A superbank per core)");
    }
    if (fpu_latency == 0) {
        throw ConfigError("fpu_latency must be positive");
    }
    if (zonl_depth < 2 || zonl_depth > static_cast<std::uint32_t>(kMaxNestDepth)) {
        throw ConfigError("zonl_depth must be in 2.." + std::to_string(kMaxNestDepth));
    }
    if (kernel_variant() == KernelVariant::ZonlNest && sequencer != SequencerKind::ZonlFrep) {
        throw ConfigError("the zonl-nest kernel needs the nesting sequencer");
    }
    if (ring_capacity < 3 * unroll) {
        throw ConfigError("ring buffer too small for the kernel body");
    }
}

namespace {

ClusterConfig make_preset(const char* name, SequencerKind seq, TcdmConfig tcdm) {
    ClusterConfig c;
    c.name = name;
    c.sequencer = seq;
    c.tcdm = tcdm;
    return c;
}

}  // namespace

ClusterConfig ClusterConfig::base32fc() { return make_preset("Base32fc", SequencerKind::BaseFrep, TcdmConfig::fc32()); }
ClusterConfig ClusterConfig::zonl32fc() { return make_preset("Zonl32fc", SequencerKind::ZonlFrep, TcdmConfig::fc32()); }
ClusterConfig ClusterConfig::zonl64fc() { return make_preset("Zonl64fc", SequencerKind::ZonlFrep, TcdmConfig::fc64()); }
ClusterConfig ClusterConfig::zonl64dobu() {
    return make_preset("Zonl64dobu", SequencerKind::ZonlFrep, TcdmConfig::dobu64());
}
ClusterConfig ClusterConfig::zonl48dobu() {
    return make_preset("Zonl48dobu", SequencerKind::ZonlFrep, TcdmConfig::dobu48());
}

std::vector<std::string> ClusterConfig::preset_names() {
    return {"Base32fc", "Zonl32fc", "Zonl64fc", "Zonl64dobu", "Zonl48dobu"};
}

ClusterConfig ClusterConfig::preset(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (lower == "base32fc") return base32fc();
    if (lower == "zonl32fc") return zonl32fc();
    if (lower == "zonl64fc") return zonl64fc();
    if (lower == "zonl64dobu" || lower == "zonl64db") return zonl64dobu();
    if (lower == "zonl48dobu" || lower == "zonl48db") return zonl48dobu();
    throw ConfigError("unknown preset '" + name + "'");
}

double RunStats::fraction(std::uint64_t CoreStats::*field) const {
    if (total_cycles == 0 || per_core.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& c : per_core) {
        sum += static_cast<double>(c.*field) / static_cast<double>(total_cycles);
    }
    return sum / static_cast<double>(per_core.size());
}

bool RunStats::accounting_closed() const {
    return std::all_of(per_core.begin(), per_core.end(), [&](const CoreStats& c) { return c.total() == total_cycles; });
}

namespace {

struct Origin {
    std::uint32_t core;
    int stream;  ///< -1: DMA
};

}  // namespace

RunStats simulate(const ClusterConfig& config, const MatmulProblem& problem_in, const SimOptions& options) {
    config.validate();
    MatmulProblem problem = problem_in;
    problem.unroll = config.unroll;
    problem.tile_m = config.n_cores;

    const auto sched = gen_schedule(problem, config.tcdm, config.n_cores);
    const BufferLayout layout(config.tcdm);
    const auto variant = config.kernel_variant();

    Tcdm tcdm(config.tcdm, config.arbitration, options.functional);
    if (options.conflict_trace) {
        tcdm.set_conflict_trace(options.conflict_trace);
    }
    std::vector<double> l2;
    if (options.functional) {
        fill_inputs(l2, sched, config.seed);
        if (!options.inputs.empty()) {
            if (options.inputs.size() != sched.c_offset()) {
                throw ConfigError("functional inputs must hold M*K + K*N values");
            }
            std::copy(options.inputs.begin(), options.inputs.end(), l2.begin());
        }
    }
    DmaEngine dma(tcdm, options.functional ? &l2 : nullptr);

    std::vector<std::unique_ptr<Core>> cores;
    for (std::uint32_t c = 0; c < config.n_cores; ++c) {
        cores.push_back(std::make_unique<Core>(static_cast<std::uint16_t>(c), config.core_params(), tcdm));
        cores.back()->load_program(gen_core_program(sched, c, layout, variant));
        if (options.sequencer_trace) {
            cores.back()->sequencer().set_trace(
                [&options, c](const SequencerTraceRecord& r) { options.sequencer_trace(c, r); });
        }
    }

    const auto T = static_cast<std::uint32_t>(sched.tiles.size());
    for (const auto& d : sched.phases[0]) {
        dma.dma_transfer(d);
    }

    std::vector<MemRequest> reqs;
    std::vector<Origin> origin;
    reqs.reserve(config.n_cores * kStreamsPerCore + 1);
    origin.reserve(reqs.capacity());

    std::vector<CoreStats> snap_start(config.n_cores);
    std::vector<CoreStats> snap_end(config.n_cores);
    std::uint64_t conflicts_start = 0;
    std::uint64_t conflicts_end = 0;
    std::uint64_t region_start = 0;
    std::uint64_t region_end = 0;
    std::uint32_t next_barrier = 0;
    std::uint64_t cycle = 0;

    for (;; ++cycle) {
        if (cycle >= options.max_cycles) {
            throw IntegrityFault("simulation did not finish within " + std::to_string(options.max_cycles) + " cycles");
        }
        for (auto& core : cores) {
            core->step(cycle);
        }

        reqs.clear();
        origin.clear();
        for (std::uint32_t c = 0; c < config.n_cores; ++c) {
            for (int s = 0; s < kStreamsPerCore; ++s) {
                if (auto r = cores[c]->stream(static_cast<StreamId>(s)).gen_request(cycle)) {
                    reqs.push_back(*r);
                    origin.push_back({c, s});
                }
            }
        }
        if (auto r = dma.gen_request(cycle)) {
            reqs.push_back(*r);
            origin.push_back({0, -1});
        }

        if (!reqs.empty()) {
            const auto res = tcdm.arbitrate(cycle, reqs);
            for (std::size_t i = 0; i < reqs.size(); ++i) {
                const auto& o = origin[i];
                if (o.stream < 0) {
                    res.granted[i] ? dma.on_grant(reqs[i], cycle) : dma.on_conflict(reqs[i]);
                } else {
                    auto& su = cores[o.core]->stream(static_cast<StreamId>(o.stream));
                    res.granted[i] ? su.on_grant(reqs[i], cycle, tcdm) : su.on_conflict(reqs[i]);
                }
            }
        }

        if (next_barrier <= T && !dma.busy() &&
            std::all_of(cores.begin(), cores.end(), [](const auto& c) { return c->at_barrier(); })) {
            for (auto& core : cores) {
                core->release_barrier();
            }
            if (next_barrier == 0) {
                region_start = cycle + 1;
                conflicts_start = tcdm.total_conflicts();
                for (std::uint32_t c = 0; c < config.n_cores; ++c) snap_start[c] = cores[c]->stats();
            }
            if (next_barrier == T) {
                region_end = cycle + 1;
                conflicts_end = tcdm.total_conflicts();
                for (std::uint32_t c = 0; c < config.n_cores; ++c) snap_end[c] = cores[c]->stats();
            }
            for (const auto& d : sched.phases[next_barrier + 1]) {
                dma.dma_transfer(d);
            }
            ++next_barrier;
        }
        if (next_barrier > T && !dma.busy()) {
            ++cycle;
            break;
        }
    }

    RunStats st;
    st.config = config.name;
    st.problem = problem;
    st.variant = variant;
    st.end_to_end_cycles = cycle;
    st.tiles = T;
    st.region_start = options.end_to_end ? 0 : region_start;
    st.region_end = options.end_to_end ? cycle : region_end;
    st.total_cycles = st.region_end - st.region_start;
    st.per_core.resize(config.n_cores);
    for (std::uint32_t c = 0; c < config.n_cores; ++c) {
        // Cores keep booking idle cycles through the epilogue.
        st.per_core[c] = options.end_to_end ? cores[c]->stats() : snap_end[c] - snap_start[c];
        st.cluster += st.per_core[c];
    }
    st.utilization = st.fraction(&CoreStats::busy);
    st.total_conflicts = tcdm.total_conflicts();
    st.region_conflicts = options.end_to_end ? tcdm.total_conflicts() : conflicts_end - conflicts_start;
    st.conflicts_per_bank = tcdm.conflicts_per_bank();
    st.dma_busy_cycles = dma.busy_cycles();
    st.dma_beats = dma.beats_done();
    st.dma_conflicts = dma.conflicts();

    if (options.functional) {
        st.functional = true;
        const auto& p = problem;
        std::vector<double> A(l2.begin(), l2.begin() + static_cast<std::ptrdiff_t>(sched.b_offset()));
        std::vector<double> B(l2.begin() + static_cast<std::ptrdiff_t>(sched.b_offset()),
                              l2.begin() + static_cast<std::ptrdiff_t>(sched.c_offset()));
        const auto ref = reference_matmul(A, B, p.M, p.N, p.K);
        st.c.assign(l2.begin() + static_cast<std::ptrdiff_t>(sched.c_offset()), l2.end());
        st.bitwise_equal = true;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const double got = l2[sched.c_offset() + i];
            st.max_abs_error = std::max(st.max_abs_error, std::abs(got - ref[i]));
            st.bitwise_equal = st.bitwise_equal && std::memcmp(&got, &ref[i], sizeof(double)) == 0;
        }
    }
    return st;
}

double functional_check(const ClusterConfig& config, const MatmulProblem& problem) {
    SimOptions opt;
    opt.functional = true;
    return simulate(config, problem, opt).max_abs_error;
}

}  // namespace clustersim
