#pragma once

// Independent reference models shared by the unit and acceptance tests.

#include <cstdint>
#include <random>
#include <vector>

#include "clustersim/isa.hpp"
#include "clustersim/sequencer.hpp"
#include "clustersim/stream.hpp"

namespace oracle {

using namespace clustersim;

// A loop nest following the template
//   frep N: [A insns] (inner loop | B insns) [C insns]
// Leaves carry a unique tag; loops carry their repeat count.
struct NestNode {
    std::uint32_t tag = 0;
    std::uint32_t rpt = 0;  // 0: leaf
    std::vector<NestNode> body;
};

inline std::uint32_t buffered_size(const NestNode& n) {
    if (n.rpt == 0) return 1;
    std::uint32_t s = 0;
    for (const auto& c : n.body) s += buffered_size(c);
    return s;
}

inline std::uint64_t dynamic_size(const NestNode& n) {
    if (n.rpt == 0) return 1;
    std::uint64_t s = 0;
    for (const auto& c : n.body) s += dynamic_size(c);
    return s * n.rpt;
}

inline void reference_expand(const NestNode& n, std::vector<std::uint32_t>& out) {
    if (n.rpt == 0) {
        out.push_back(n.tag);
        return;
    }
    for (std::uint32_t r = 0; r < n.rpt; ++r) {
        for (const auto& c : n.body) reference_expand(c, out);
    }
}

inline void flatten(const NestNode& n, std::vector<Instruction>& out) {
    if (n.rpt == 0) {
        auto inst = make::fmadd(static_cast<std::uint8_t>(n.tag % 8));
        inst.tag = n.tag;
        out.push_back(inst);
        return;
    }
    out.push_back(make::frep(n.rpt, buffered_size(n)));
    for (const auto& c : n.body) flatten(c, out);
}

// Top-level program node: its body is straight-line code, not a loop.
inline std::vector<Instruction> flatten_program(const NestNode& top) {
    std::vector<Instruction> out;
    for (const auto& c : top.body) flatten(c, out);
    return out;
}

inline std::vector<std::uint32_t> expand_program(const NestNode& top) {
    std::vector<std::uint32_t> out;
    for (const auto& c : top.body) reference_expand(c, out);
    return out;
}

struct NestGen {
    std::mt19937_64 rng;
    std::uint32_t next_tag = 0;
    int max_depth = 4;
    std::uint32_t max_body = 16;
    std::uint32_t max_rpt = 64;

    explicit NestGen(std::uint64_t seed) : rng(seed) {}

    std::uint32_t pick(std::uint32_t lo, std::uint32_t hi) {
        return lo + static_cast<std::uint32_t>(rng() % (hi - lo + 1));
    }

    NestNode leaf() { return NestNode{next_tag++, 0, {}}; }

    // One loop at `depth` (1 = outermost). Shared starts/ends happen when
    // the A or C part is empty.
    NestNode loop(int depth) {
        NestNode n;
        n.rpt = pick(1, max_rpt);
        const bool nest_inner = depth < max_depth && pick(0, 2) != 0;
        const auto a = pick(0, 3) == 0 ? 0 : pick(0, 4);
        const auto c = pick(0, 3) == 0 ? 0 : pick(0, 4);
        for (std::uint32_t i = 0; i < a; ++i) n.body.push_back(leaf());
        if (nest_inner) {
            n.body.push_back(loop(depth + 1));
        } else {
            const auto b = pick(1, max_body);
            for (std::uint32_t i = 0; i < b; ++i) n.body.push_back(leaf());
        }
        for (std::uint32_t i = 0; i < c; ++i) n.body.push_back(leaf());
        return n;
    }

    // Caps the dynamic length by shrinking repeat counts, outermost first.
    void cap(NestNode& n, std::uint64_t limit) {
        while (dynamic_size(n) > limit && n.rpt > 1) {
            n.rpt = std::max<std::uint32_t>(1, n.rpt / 2);
        }
        for (auto& c : n.body) {
            if (dynamic_size(n) <= limit) break;
            if (c.rpt > 0) cap(c, limit);
        }
    }

    // A program: a few nests separated by straight-line instructions.
    NestNode program(std::uint64_t limit = 20000) {
        NestNode top;
        top.rpt = 1;
        const auto parts = pick(1, 3);
        for (std::uint32_t p = 0; p < parts; ++p) {
            for (auto i = pick(0, 2); i > 0; --i) top.body.push_back(leaf());
            auto l = loop(1);
            cap(l, limit / parts);
            top.body.push_back(std::move(l));
        }
        for (auto i = pick(0, 2); i > 0; --i) top.body.push_back(leaf());
        return top;
    }
};

struct SeqRun {
    std::vector<std::uint32_t> issued;
    std::uint64_t first_cycle = 0;
    std::uint64_t last_cycle = 0;
    bool nest_consistent = true;
};

// Drives a sequencer the way a control core would: one buffered push per
// cycle (frep configs are free), then one issue.
inline SeqRun run_sequencer(const std::vector<Instruction>& prog, SequencerParams params) {
    Sequencer seq(params);
    SeqRun r;
    std::size_t pc = 0;
    bool started = false;
    for (std::uint64_t cycle = 0; pc < prog.size() || !seq.idle(); ++cycle) {
        bool pushed = false;
        while (pc < prog.size()) {
            const auto& inst = prog[pc];
            if (inst.kind != InstKind::FrepCfg && pushed) break;
            if (seq.push(inst) == Sequencer::PushResult::Stall) break;
            pushed = pushed || inst.kind != InstKind::FrepCfg;
            ++pc;
        }
        if (auto inst = seq.step(cycle)) {
            if (!started) {
                started = true;
                r.first_cycle = cycle;
            }
            r.last_cycle = cycle;
            r.issued.push_back(inst->tag);
        }
        r.nest_consistent = r.nest_consistent && seq.nest().consistent();
        if (cycle > 10'000'000) break;
    }
    return r;
}

// Stream address reference: four explicit nested loops.
inline std::vector<std::uint64_t> stream_reference(const StreamConfig& cfg) {
    std::array<StreamDim, 4> d{};
    for (std::size_t i = 0; i < 4; ++i) d[i] = i < cfg.dims.size() ? cfg.dims[i] : StreamDim{1, 0};
    std::vector<std::uint64_t> out;
    for (std::uint32_t i3 = 0; i3 < d[3].bound; ++i3)
        for (std::uint32_t i2 = 0; i2 < d[2].bound; ++i2)
            for (std::uint32_t i1 = 0; i1 < d[1].bound; ++i1)
                for (std::uint32_t i0 = 0; i0 < d[0].bound; ++i0)
                    out.push_back(static_cast<std::uint64_t>(static_cast<std::int64_t>(cfg.base) + i0 * d[0].stride +
                                                             i1 * d[1].stride + i2 * d[2].stride + i3 * d[3].stride));
    return out;
}

}  // namespace oracle
