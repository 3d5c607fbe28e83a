#pragma once

// Compute core: an in-order integer control core that walks the program
// and offloads FP work to the FREP sequencer, plus a pipelined FPU fed by
// three stream units.
//
// Issue model, one slot per cycle:
//  - Instructions the sequencer accepts (FP compute, frep, FP<->int moves)
//    are pushed at most one per cycle; frep configs decode for free.
//  - Loop management, stream configuration and barriers run on the
//    integer core. They wait until the sequencer has drained and then
//    take one cycle each. A taken branch adds branch_penalty bubbles.
//  - The FPU issues one instruction per cycle from the sequencer when its
//    stream operands are present, its accumulator is ready and the write
//    stream has room.

#include <array>
#include <cstdint>
#include <vector>

#include "clustersim/isa.hpp"
#include "clustersim/memory.hpp"
#include "clustersim/sequencer.hpp"
#include "clustersim/stream.hpp"

namespace clustersim {

inline constexpr int kFpRegs = 16;

struct CoreParams {
    std::uint32_t fpu_latency = 3;
    std::uint32_t branch_penalty = 1;
    SequencerParams sequencer{};
    StreamParams streams{};
};

enum class StallReason : std::uint8_t { None, StreamStarved, Raw, WbBlocked };

enum class CycleOutcome : std::uint8_t { IssuedCompute, IssuedOther, Stall };

/// Where a cycle is booked. busy + the rest always sums to the total.
enum class CycleCategory : std::uint8_t { Busy, LoopOverhead, ConflictStall, RawStall, Startup };

std::string to_string(StallReason r);
std::string to_string(CycleCategory c);

struct CycleRecord {
    CycleOutcome outcome = CycleOutcome::Stall;
    StallReason reason = StallReason::None;
    CycleCategory category = CycleCategory::Startup;
};

struct CoreStats {
    std::uint64_t busy = 0;
    std::uint64_t loop_overhead = 0;
    std::uint64_t conflict_stall = 0;
    std::uint64_t raw_stall = 0;
    std::uint64_t startup = 0;

    std::uint64_t starved_cycles = 0;  ///< all StreamStarved stalls, whatever their booking
    std::uint64_t wb_blocked_cycles = 0;
    std::uint64_t fp_issued = 0;
    std::uint64_t int_loop_insts = 0;

    std::uint64_t total() const { return busy + loop_overhead + conflict_stall + raw_stall + startup; }
    void add(CycleCategory c);
    CoreStats& operator+=(const CoreStats& o);
    CoreStats operator-(const CoreStats& o) const;
};

class Core {
public:
    Core(std::uint16_t id, CoreParams params, Tcdm& tcdm);

    void load_program(std::vector<Instruction> program);

    /// Advances the core by one cycle. Exactly one outcome per call.
    CycleRecord step(std::uint64_t cycle);

    bool at_barrier() const { return at_barrier_; }
    void release_barrier() { at_barrier_ = false; }
    /// Program fully executed and all results written.
    bool finished() const;

    StreamUnit& stream(StreamId s) { return streams_[static_cast<int>(s)]; }
    const StreamUnit& stream(StreamId s) const { return streams_[static_cast<int>(s)]; }
    Sequencer& sequencer() { return seq_; }
    const CoreStats& stats() const { return stats_; }
    std::uint16_t id() const { return id_; }
    StallReason stall_reason() const { return stall_reason_; }
    double fp_reg(int r) const { return regs_[r]; }
    std::size_t pc() const { return pc_; }

private:
    void frontend_push();
    bool serialized(const Instruction& inst) const;
    CycleRecord try_fpu(const Instruction& inst, std::uint64_t cycle);
    CycleRecord run_integer(const Instruction& inst, std::uint64_t cycle);
    CycleRecord book(CycleRecord r);

    std::uint16_t id_;
    CoreParams params_;
    Tcdm& tcdm_;
    Sequencer seq_;
    std::array<StreamUnit, kStreamsPerCore> streams_;
    std::array<double, kFpRegs> regs_{};
    std::array<std::uint64_t, kFpRegs> reg_ready_{};
    std::uint64_t fpu_quiet_at_ = 0;  ///< cycle at which the last in-flight result lands

    std::vector<Instruction> program_;
    std::size_t pc_ = 0;
    std::uint32_t bubbles_ = 0;
    bool at_barrier_ = false;
    bool computed_since_cfg_ = false;
    StallReason stall_reason_ = StallReason::None;
    CoreStats stats_;
};

}  // namespace clustersim
