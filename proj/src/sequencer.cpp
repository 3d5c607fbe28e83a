#include "clustersim/sequencer.hpp"

#include <bit>
#include <string>

namespace clustersim {

bool NestState::consistent() const {
    if (loop_cnt < 0 || loop_cnt > kMaxNestDepth || loop_idx < -1 || loop_idx >= loop_cnt) {
        return false;
    }
    for (int i = 0; i < loop_cnt; ++i) {
        const auto& l = loops[i];
        if (l.cfg.max_inst == 0 || l.cfg.max_rpt == 0) return false;
        if (l.inst_cnt >= l.cfg.max_inst || l.iter_cnt >= l.cfg.max_rpt) return false;
        if (i > 0) {
            const auto& outer = loops[i - 1];
            if (l.base_ptr < outer.base_ptr || l.end_ptr() > outer.end_ptr()) return false;
        }
    }
    return true;
}

int detect_starting_loops(std::uint64_t raddr, const NestState& nest) {
    // Leading-one count over the "starts here" vector of the loops inner
    // to the active one.
    std::uint8_t starts = 0;
    for (int i = nest.loop_idx + 1; i < nest.loop_cnt; ++i) {
        if (nest.loops[i].base_ptr == raddr) {
            starts |= static_cast<std::uint8_t>(1U << i);
        }
    }
    const int n = std::countr_one(static_cast<std::uint8_t>(starts >> (nest.loop_idx + 1)));
    return nest.loop_idx + n;
}

int detect_ending_loops(const NestState& nest) {
    if (nest.loop_idx < 0) {
        return nest.loop_idx;
    }
    // Trailing-one count, scanning outward from the active loop.
    std::uint8_t ends = 0;
    for (int i = 0; i <= nest.loop_idx; ++i) {
        const auto& l = nest.loops[i];
        if (l.last_iter() && l.last_inst()) {
            ends |= static_cast<std::uint8_t>(1U << i);
        }
    }
    const auto aligned = static_cast<std::uint8_t>(ends << (7 - nest.loop_idx));
    const int n = std::countl_one(aligned);
    return nest.loop_idx - n;
}

Sequencer::Sequencer(SequencerParams params) : params_(params), entries_(params.capacity) {
    if (params_.capacity == 0) {
        throw ConfigError("sequencer ring buffer needs at least one entry");
    }
    if (params_.max_depth < 1 || params_.max_depth > kMaxNestDepth) {
        throw ConfigError("sequencer nest depth must be in 1.." + std::to_string(kMaxNestDepth));
    }
}

std::uint64_t Sequencer::tail() const {
    if (nest_.loop_cnt > 0 && nest_.loops[0].base_ptr < raddr_) {
        return nest_.loops[0].base_ptr;
    }
    return raddr_;
}

Sequencer::PushResult Sequencer::register_loop(const FrepConfig& cfg) {
    if (cfg.max_inst == 0 || cfg.max_rpt == 0) {
        throw ConfigError("frep needs a non-empty body and at least one iteration");
    }
    if (cfg.max_inst > params_.capacity) {
        throw ConfigError("frep body of " + std::to_string(cfg.max_inst) + " instructions exceeds ring buffer of " +
                          std::to_string(params_.capacity));
    }
    if (nest_.loop_cnt > 0) {
        const auto& outermost = nest_.loops[0];
        if (wptr_ >= outermost.end_ptr()) {
            // A new nest after a fully buffered one: wait until it retires.
            return PushResult::Stall;
        }
        const auto& innermost = nest_.loops[nest_.loop_cnt - 1];
        if (wptr_ + cfg.max_inst > innermost.end_ptr() || wptr_ < innermost.base_ptr) {
            throw ConfigError("frep body overlaps an enclosing loop without being nested in it");
        }
        if (nest_.loop_cnt == params_.max_depth) {
            throw NestDepthError("loop nest deeper than " + std::to_string(params_.max_depth));
        }
    }
    auto& l = nest_.loops[nest_.loop_cnt];
    l = LoopState{cfg, wptr_, 0, 0};
    ++nest_.loop_cnt;
    return PushResult::Accepted;
}

Sequencer::PushResult Sequencer::push(const Instruction& inst) {
    if (inst.kind == InstKind::FrepCfg) {
        if (!inst.frep_payload) {
            throw ConfigError("frep instruction without payload");
        }
        return register_loop(*inst.frep_payload);
    }
    if (inst.uses_int_rf) {
        if (bypass_) {
            return PushResult::Stall;
        }
        bypass_ = inst;
        return PushResult::Accepted;
    }
    if (occupancy() == params_.capacity) {
        return PushResult::Stall;
    }
    entries_[wptr_ % params_.capacity] = inst;
    ++wptr_;
    return PushResult::Accepted;
}

std::optional<Instruction> Sequencer::peek() const {
    if (bypass_) {
        return bypass_;
    }
    if (raddr_ < wptr_) {
        return entries_[raddr_ % params_.capacity];
    }
    return std::nullopt;
}

std::optional<Instruction> Sequencer::step(std::uint64_t cycle) {
    if (bypass_) {
        auto inst = std::move(*bypass_);
        bypass_.reset();
        if (trace_) {
            trace_({cycle, raddr_, nest_.loop_idx, true, inst});
        }
        return inst;
    }
    if (raddr_ == wptr_) {
        return std::nullopt;
    }
    nest_.loop_idx = detect_starting_loops(raddr_, nest_);
    auto inst = entries_[raddr_ % params_.capacity];
    if (trace_) {
        trace_({cycle, raddr_, nest_.loop_idx, false, inst});
    }
    advance_after_issue();
    return inst;
}

void Sequencer::advance_after_issue() {
    const int active = nest_.loop_idx;
    if (active < 0) {
        ++raddr_;
        return;
    }

    const int inel = detect_ending_loops(nest_);
    const bool nest_ends = inel < 0;
    if (nest_ends) {
        nest_.loop_cnt = 0;
        nest_.loop_idx = -1;
        ++raddr_;
        return;
    }

    // A loop counts this instruction if it is the active one, or if every
    // loop between it and the active one is in its last iteration.
    bool inner_last_iter = true;
    bool rewind = false;
    for (int i = active; i >= 0; --i) {
        auto& l = nest_.loops[i];
        const bool incr = (i == active) || inner_last_iter;
        const bool was_last_iter = l.last_iter();
        if (incr) {
            if (i > inel) {
                // Ends here, but an enclosing loop goes on: re-arm for re-entry.
                l.inst_cnt = 0;
                l.iter_cnt = 0;
            } else if (l.last_inst()) {
                l.inst_cnt = 0;
                ++l.iter_cnt;
                if (i == inel) {
                    rewind = true;
                }
            } else {
                ++l.inst_cnt;
            }
        }
        inner_last_iter = inner_last_iter && was_last_iter;
    }

    nest_.loop_idx = inel;
    if (rewind) {
        raddr_ = nest_.loops[inel].base_ptr;
    } else {
        ++raddr_;
    }
}

}  // namespace clustersim
