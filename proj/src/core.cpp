#include "clustersim/core.hpp"

#include <cmath>

namespace clustersim {

std::string to_string(StallReason r) {
    switch (r) {
    case StallReason::None: return "none";
    case StallReason::StreamStarved: return "stream_starved";
    case StallReason::Raw: return "raw";
    case StallReason::WbBlocked: return "wb_blocked";
    }
    return "?";
}

std::string to_string(CycleCategory c) {
    switch (c) {
    case CycleCategory::Busy: return "busy";
    case CycleCategory::LoopOverhead: return "loop_overhead";
    case CycleCategory::ConflictStall: return "conflict_stall";
    case CycleCategory::RawStall: return "raw_stall";
    case CycleCategory::Startup: return "startup";
    }
    return "?";
}

void CoreStats::add(CycleCategory c) {
    switch (c) {
    case CycleCategory::Busy: ++busy; break;
    case CycleCategory::LoopOverhead: ++loop_overhead; break;
    case CycleCategory::ConflictStall: ++conflict_stall; break;
    case CycleCategory::RawStall: ++raw_stall; break;
    case CycleCategory::Startup: ++startup; break;
    }
}

CoreStats& CoreStats::operator+=(const CoreStats& o) {
    busy += o.busy;
    loop_overhead += o.loop_overhead;
    conflict_stall += o.conflict_stall;
    raw_stall += o.raw_stall;
    startup += o.startup;
    starved_cycles += o.starved_cycles;
    wb_blocked_cycles += o.wb_blocked_cycles;
    fp_issued += o.fp_issued;
    int_loop_insts += o.int_loop_insts;
    return *this;
}

CoreStats CoreStats::operator-(const CoreStats& o) const {
    CoreStats d;
    d.busy = busy - o.busy;
    d.loop_overhead = loop_overhead - o.loop_overhead;
    d.conflict_stall = conflict_stall - o.conflict_stall;
    d.raw_stall = raw_stall - o.raw_stall;
    d.startup = startup - o.startup;
    d.starved_cycles = starved_cycles - o.starved_cycles;
    d.wb_blocked_cycles = wb_blocked_cycles - o.wb_blocked_cycles;
    d.fp_issued = fp_issued - o.fp_issued;
    d.int_loop_insts = int_loop_insts - o.int_loop_insts;
    return d;
}

Core::Core(std::uint16_t id, CoreParams params, Tcdm& tcdm)
    : id_(id),
      params_(params),
      tcdm_(tcdm),
      seq_(params.sequencer),
      streams_{StreamUnit(StreamId::S0, id, params.streams), StreamUnit(StreamId::S1, id, params.streams),
               StreamUnit(StreamId::S2, id, params.streams)} {
    if (params_.fpu_latency == 0) {
        throw ConfigError("FPU latency must be at least one cycle");
    }
}

void Core::load_program(std::vector<Instruction> program) {
    program_ = std::move(program);
    pc_ = 0;
}

bool Core::finished() const {
    return pc_ == program_.size() && seq_.drained() && !at_barrier_ && stream(StreamId::S2).idle();
}

bool Core::serialized(const Instruction& inst) const {
    return inst.kind == InstKind::IntLoopMgmt || inst.kind == InstKind::SsrCfg || inst.op == Op::Barrier;
}

void Core::frontend_push() {
    bool pushed = false;
    while (pc_ < program_.size()) {
        const auto& inst = program_[pc_];
        if (serialized(inst)) {
            return;
        }
        if (inst.kind != InstKind::FrepCfg && pushed) {
            return;
        }
        if (seq_.push(inst) == Sequencer::PushResult::Stall) {
            return;
        }
        pushed = pushed || inst.kind != InstKind::FrepCfg;
        ++pc_;
    }
}

CycleRecord Core::book(CycleRecord r) {
    stall_reason_ = r.reason;
    stats_.add(r.category);
    return r;
}

CycleRecord Core::try_fpu(const Instruction& inst, std::uint64_t cycle) {
    for (auto s : {StreamId::S0, StreamId::S1}) {
        if (inst.reads(s) && !stream(s).data_ready(cycle)) {
            ++stats_.starved_cycles;
            const bool conflict = computed_since_cfg_ && stream(s).conflicts_since_config() > 0;
            return {CycleOutcome::Stall, StallReason::StreamStarved,
                    conflict ? CycleCategory::ConflictStall : CycleCategory::Startup};
        }
    }
    if (inst.acc_reg && reg_ready_[*inst.acc_reg] > cycle) {
        return {CycleOutcome::Stall, StallReason::Raw, CycleCategory::RawStall};
    }
    if (inst.writes_stream && !stream(*inst.writes_stream).can_accept()) {
        ++stats_.wb_blocked_cycles;
        const bool conflict = stream(*inst.writes_stream).conflicts_since_config() > 0;
        return {CycleOutcome::Stall, StallReason::WbBlocked,
                conflict ? CycleCategory::ConflictStall : CycleCategory::Startup};
    }

    seq_.step(cycle);
    if (inst.kind != InstKind::FpCompute) {
        return {CycleOutcome::IssuedOther, StallReason::None, CycleCategory::Startup};
    }

    const double a = inst.reads(StreamId::S0) ? stream(StreamId::S0).pop(cycle) : 0.0;
    const double b = inst.reads(StreamId::S1) ? stream(StreamId::S1).pop(cycle) : 0.0;
    double result = 0.0;
    if (inst.op == Op::Fmul) {
        result = a * b;
    } else if (inst.op == Op::Fmadd) {
        result = std::fma(a, b, regs_[*inst.acc_reg]);
    }
    const std::uint64_t ready = cycle + params_.fpu_latency;
    if (inst.dst_reg) {
        regs_[*inst.dst_reg] = result;
        reg_ready_[*inst.dst_reg] = ready;
    }
    if (inst.writes_stream) {
        stream(*inst.writes_stream).push_result(result, ready);
    }
    fpu_quiet_at_ = ready;
    computed_since_cfg_ = true;
    ++stats_.fp_issued;
    return {CycleOutcome::IssuedCompute, StallReason::None, CycleCategory::Busy};
}

CycleRecord Core::run_integer(const Instruction& inst, std::uint64_t cycle) {
    const CycleRecord idle{CycleOutcome::Stall, StallReason::None, CycleCategory::Startup};
    if (!seq_.drained()) {
        return idle;
    }
    switch (inst.kind) {
    case InstKind::IntLoopMgmt:
        ++pc_;
        ++stats_.int_loop_insts;
        if (inst.taken_branch) {
            bubbles_ = params_.branch_penalty;
        }
        return {CycleOutcome::IssuedOther, StallReason::None, CycleCategory::LoopOverhead};
    case InstKind::SsrCfg: {
        auto& s = stream(*inst.ssr_target);
        if (!s.idle()) {
            return idle;
        }
        s.configure(*inst.ssr_payload, tcdm_.config());
        computed_since_cfg_ = false;
        ++pc_;
        return {CycleOutcome::IssuedOther, StallReason::None, CycleCategory::Startup};
    }
    default:
        // Barrier: all results must have landed in memory first.
        if (fpu_quiet_at_ > cycle || !stream(StreamId::S2).idle()) {
            return idle;
        }
        ++pc_;
        at_barrier_ = true;
        return {CycleOutcome::IssuedOther, StallReason::None, CycleCategory::Startup};
    }
}

CycleRecord Core::step(std::uint64_t cycle) {
    if (bubbles_ > 0) {
        --bubbles_;
        return book({CycleOutcome::Stall, StallReason::None, CycleCategory::LoopOverhead});
    }
    if (at_barrier_) {
        return book({CycleOutcome::Stall, StallReason::None, CycleCategory::Startup});
    }
    frontend_push();
    if (auto inst = seq_.peek()) {
        return book(try_fpu(*inst, cycle));
    }
    if (pc_ < program_.size()) {
        return book(run_integer(program_[pc_], cycle));
    }
    return book({CycleOutcome::Stall, StallReason::None, CycleCategory::Startup});
}

}  // namespace clustersim
