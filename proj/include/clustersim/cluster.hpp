#pragma once

// Cluster assembly and the clocked simulation loop.
//
// Per cycle: every core steps (consumes stream data, issues), then all
// stream units and the DMA engine post requests, the TCDM arbitrates,
// and grants/conflicts are delivered. Barriers release once every core
// has arrived and the DMA phase running alongside the tile has finished;
// the release also starts the next DMA phase.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clustersim/core.hpp"
#include "clustersim/kernels.hpp"
#include "clustersim/memory.hpp"

namespace clustersim {

enum class SequencerKind : std::uint8_t { BaseFrep, ZonlFrep };

std::string to_string(SequencerKind k);
SequencerKind parse_sequencer_kind(const std::string& s);

struct ClusterConfig {
    std::string name = "custom";
    std::uint32_t n_cores = 8;
    SequencerKind sequencer = SequencerKind::ZonlFrep;
    TcdmConfig tcdm{};
    std::uint32_t fpu_latency = 3;
    std::uint32_t unroll = 8;
    std::uint32_t branch_penalty = 1;
    ArbitrationPolicy arbitration = ArbitrationPolicy::RoundRobin;
    std::uint64_t seed = 1;

    std::uint32_t ring_capacity = 32;
    std::uint32_t zonl_depth = 2;
    StreamParams streams{};
    /// Empty: BaselineLoop for BaseFrep, ZonlNest for ZonlFrep.
    std::optional<KernelVariant> kernel;

    KernelVariant kernel_variant() const;
    CoreParams core_params() const;
    void validate() const;

    static ClusterConfig base32fc();
    static ClusterConfig zonl32fc();
    static ClusterConfig zonl64fc();
    static ClusterConfig zonl64dobu();
    static ClusterConfig zonl48dobu();
    /// Throws ConfigError for unknown names.
    static ClusterConfig preset(const std::string& name);
    static std::vector<std::string> preset_names();
};

struct SimOptions {
    bool functional = false;
    /// Measure from cycle 0 to the end of the epilogue instead of from
    /// the first tile's start to the last tile's end.
    bool end_to_end = false;
    std::uint64_t max_cycles = 200'000'000;
    /// Functional mode: main-memory image (A then B, row-major). Empty:
    /// pseudo-random data from the config seed.
    std::vector<double> inputs;
    std::function<void(const ConflictTraceRecord&)> conflict_trace;
    std::function<void(std::uint32_t core, const SequencerTraceRecord&)> sequencer_trace;
};

struct RunStats {
    std::string config;
    MatmulProblem problem;
    KernelVariant variant = KernelVariant::ZonlNest;

    std::uint64_t total_cycles = 0;      ///< measured region
    std::uint64_t end_to_end_cycles = 0; ///< cycle 0 to last DMA beat
    std::uint64_t region_start = 0;
    std::uint64_t region_end = 0;
    std::vector<CoreStats> per_core;     ///< measured region
    CoreStats cluster;                   ///< sum over cores
    double utilization = 0.0;            ///< mean over compute cores

    std::uint32_t tiles = 0;
    std::uint64_t total_conflicts = 0;
    std::uint64_t region_conflicts = 0;
    std::vector<std::uint64_t> conflicts_per_bank;
    std::uint64_t dma_busy_cycles = 0;
    std::uint64_t dma_beats = 0;
    std::uint64_t dma_conflicts = 0;

    bool functional = false;
    double max_abs_error = 0.0;
    bool bitwise_equal = false;
    std::vector<double> c;  ///< functional mode: C as read back from main memory

    double fraction(std::uint64_t CoreStats::*field) const;
    /// busy + stalls + startup == total for every core.
    bool accounting_closed() const;
};

/// Runs one problem on one configuration. Deterministic for fixed inputs.
/// Throws ConfigError for invalid configurations or problems and
/// IntegrityFault if the run does not finish within max_cycles.
RunStats simulate(const ClusterConfig& config, const MatmulProblem& problem, const SimOptions& options = {});

/// Functional run; returns max |C - reference|.
double functional_check(const ClusterConfig& config, const MatmulProblem& problem);

}  // namespace clustersim
