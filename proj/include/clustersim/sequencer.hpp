#pragma once

// FREP sequencer with zero-overhead loop nests.
//
// Instructions arrive from the control core one at a time. FREP configs
// register loops in the nest controller, loop-body candidates are written
// into a ring buffer, and instructions touching the integer register file
// bypass the buffer. The buffer issues at most one instruction per cycle.
//
// Ring buffer pointers are kept as absolute (monotonic) positions; the
// physical slot is position % capacity.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "clustersim/error.hpp"
#include "clustersim/isa.hpp"

namespace clustersim {

inline constexpr int kMaxNestDepth = 4;

class NestDepthError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct LoopState {
    FrepConfig cfg;
    std::uint64_t base_ptr = 0;
    std::uint32_t inst_cnt = 0;
    std::uint32_t iter_cnt = 0;

    bool last_inst() const { return inst_cnt + 1 == cfg.max_inst; }
    bool last_iter() const { return iter_cnt + 1 == cfg.max_rpt; }
    /// One past the last ring-buffer position of the body.
    std::uint64_t end_ptr() const { return base_ptr + cfg.max_inst; }
};

struct NestState {
    std::array<LoopState, kMaxNestDepth> loops{};
    int loop_cnt = 0;
    int loop_idx = -1;  ///< innermost loop containing the next instruction; -1 outside any loop

    /// Checks the counter bounds of every registered loop and the nesting
    /// order of their bodies. Returns false on the first violation.
    bool consistent() const;
};

/// Index of the innermost loop starting at `raddr`, scanning inward from
/// the active loop. Returns loop_idx when no further loop starts there.
int detect_starting_loops(std::uint64_t raddr, const NestState& nest);

/// Innermost loop that does not end on the instruction about to issue,
/// i.e. (outermost consecutive ending loop) - 1. Returns loop_idx when the
/// active loop does not end; -1 means the whole nest ends.
int detect_ending_loops(const NestState& nest);

struct SequencerParams {
    std::size_t capacity = 32;
    int max_depth = 2;
};

struct SequencerTraceRecord {
    std::uint64_t cycle = 0;
    std::uint64_t raddr = 0;
    int loop_idx = -1;
    bool bypass = false;
    Instruction inst;
};

class Sequencer {
public:
    enum class PushResult { Accepted, Stall };

    explicit Sequencer(SequencerParams params = {});

    /// Offers one instruction from the core. FREP configs are consumed by
    /// the nest controller; integer-RF instructions go to the bypass slot;
    /// everything else is buffered. Stall means "retry next cycle".
    /// Throws NestDepthError when a nest deeper than max_depth is built and
    /// ConfigError for overlapping, non-nested loops or bodies that cannot
    /// fit the buffer.
    PushResult push(const Instruction& inst);

    /// Instruction that step() would issue, without side effects.
    std::optional<Instruction> peek() const;

    /// One cycle of issue. The bypass slot has priority over the buffer.
    std::optional<Instruction> step(std::uint64_t cycle = 0);

    bool idle() const { return !bypass_ && raddr_ == wptr_ && nest_.loop_cnt == 0; }
    /// True when nothing is left in the ring buffer or bypass slot to issue.
    bool drained() const { return !bypass_ && raddr_ == wptr_; }

    std::size_t occupancy() const { return static_cast<std::size_t>(wptr_ - tail()); }
    std::size_t capacity() const { return params_.capacity; }
    std::uint64_t raddr() const { return raddr_; }
    std::uint64_t wptr() const { return wptr_; }
    const NestState& nest() const { return nest_; }
    const SequencerParams& params() const { return params_; }

    void set_trace(std::function<void(const SequencerTraceRecord&)> hook) { trace_ = std::move(hook); }

private:
    std::uint64_t tail() const;
    PushResult register_loop(const FrepConfig& cfg);
    void advance_after_issue();

    SequencerParams params_;
    std::vector<Instruction> entries_;
    std::uint64_t wptr_ = 0;
    std::uint64_t raddr_ = 0;
    NestState nest_;
    std::optional<Instruction> bypass_;
    std::function<void(const SequencerTraceRecord&)> trace_;
};

}  // namespace clustersim
