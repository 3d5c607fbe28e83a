#include "clustersim/isa.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <sstream>

#include "clustersim/error.hpp"

namespace clustersim {

namespace {

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
        return {};
    }
    auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::uint32_t parse_u32(const std::string& text, const std::string& what) {
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("invalid " + what + " '" + text + "'");
    }
    return value;
}

struct FpOperand {
    std::optional<StreamId> stream;
    std::optional<std::uint8_t> reg;
};

FpOperand parse_fp_operand(const std::string& name) {
    if (name == "ft0") return {StreamId::S0, std::nullopt};
    if (name == "ft1") return {StreamId::S1, std::nullopt};
    if (name == "ft2") return {StreamId::S2, std::nullopt};
    if (name.size() >= 2 && name[0] == 'c') {
        auto idx = parse_u32(name.substr(1), "FP register");
        if (idx >= 16) {
            throw ConfigError("FP register out of range: " + name);
        }
        return {std::nullopt, static_cast<std::uint8_t>(idx)};
    }
    throw ConfigError("unknown FP operand '" + name + "'");
}

std::string stream_reg_name(StreamId s) { return "ft" + std::to_string(static_cast<int>(s)); }
std::string acc_name(std::uint8_t r) { return "c" + std::to_string(r); }

void expect_operands(const RawInst& raw, std::size_t n) {
    if (raw.operands.size() != n) {
        throw ConfigError(raw.mnemonic + ": expected " + std::to_string(n) + " operands, got " +
                          std::to_string(raw.operands.size()));
    }
}

void expect_stream_source(const FpOperand& op, StreamId expected, const std::string& mnemonic) {
    if (op.stream != expected) {
        throw ConfigError(mnemonic + ": source must be stream register " + stream_reg_name(expected));
    }
}

Instruction classify_compute(const RawInst& raw) {
    const bool is_fmadd = raw.mnemonic == "fmadd";
    expect_operands(raw, is_fmadd ? 4 : 3);

    Instruction inst;
    inst.kind = InstKind::FpCompute;
    inst.op = is_fmadd ? Op::Fmadd : Op::Fmul;

    auto dst = parse_fp_operand(raw.operands[0]);
    auto src0 = parse_fp_operand(raw.operands[1]);
    auto src1 = parse_fp_operand(raw.operands[2]);
    expect_stream_source(src0, StreamId::S0, raw.mnemonic);
    expect_stream_source(src1, StreamId::S1, raw.mnemonic);
    inst.reads_streams = 0b011;

    if (dst.stream) {
        if (*dst.stream != StreamId::S2) {
            throw ConfigError(raw.mnemonic + ": only ft2 may be written as a stream");
        }
        inst.writes_stream = StreamId::S2;
    } else {
        inst.dst_reg = dst.reg;
    }

    if (is_fmadd) {
        auto acc = parse_fp_operand(raw.operands[3]);
        if (!acc.reg) {
            throw ConfigError("fmadd: addend must be a plain FP register");
        }
        inst.acc_reg = acc.reg;
    }
    if (inst.stream_read_count() > 2) {
        throw ConfigError("compute instruction reads more than two streams");
    }
    return inst;
}

}  // namespace

std::uint64_t StreamConfig::element_count() const {
    std::uint64_t n = 1;
    for (const auto& d : dims) {
        n *= d.bound;
    }
    return n;
}

void StreamConfig::validate() const {
    if (dims.empty() || dims.size() > kMaxStreamDims) {
        throw ConfigError("stream config needs 1..4 dimensions, got " + std::to_string(dims.size()));
    }
    if (base % 8 != 0) {
        throw ConfigError("stream base address is not 8-byte aligned");
    }
    for (const auto& d : dims) {
        if (d.bound == 0) {
            throw ConfigError("stream dimension with zero bound");
        }
        if (d.stride % 8 != 0) {
            throw ConfigError("stream stride is not a multiple of 8 bytes");
        }
    }
}

int Instruction::stream_read_count() const { return std::popcount(static_cast<unsigned>(reads_streams)); }

RawInst parse_asm(const std::string& line) {
    RawInst raw;
    auto text = trim(line);
    auto comment = text.find('#');
    if (comment != std::string::npos) {
        text = trim(text.substr(0, comment));
    }
    auto space = text.find_first_of(" \t");
    raw.mnemonic = text.substr(0, space);
    if (space == std::string::npos) {
        return raw;
    }
    std::stringstream rest(text.substr(space + 1));
    std::string operand;
    while (std::getline(rest, operand, ',')) {
        raw.operands.push_back(trim(operand));
    }
    return raw;
}

Instruction classify(const RawInst& raw) {
    const auto& m = raw.mnemonic;
    if (m == "fmul" || m == "fmadd") {
        return classify_compute(raw);
    }
    if (m == "frep") {
        expect_operands(raw, 2);
        FrepConfig cfg{parse_u32(raw.operands[1], "frep body length"),
                       parse_u32(raw.operands[0], "frep iteration count")};
        if (cfg.max_inst == 0 || cfg.max_rpt == 0) {
            throw ConfigError("frep needs a non-empty body and at least one iteration");
        }
        Instruction inst;
        inst.kind = InstKind::FrepCfg;
        inst.op = Op::Frep;
        inst.frep_payload = cfg;
        return inst;
    }
    if (m == "scfgw") {
        expect_operands(raw, 1);
        auto target = parse_fp_operand(raw.operands[0]);
        if (!target.stream) {
            throw ConfigError("scfgw targets a stream register");
        }
        if (!raw.ssr_payload) {
            throw ConfigError("scfgw without a stream configuration");
        }
        raw.ssr_payload->validate();
        const bool write_target = *target.stream == StreamId::S2;
        if (write_target != (raw.ssr_payload->direction == StreamDir::Write)) {
            throw ConfigError("stream direction does not match target register");
        }
        Instruction inst;
        inst.kind = InstKind::SsrCfg;
        inst.op = Op::Scfgw;
        inst.uses_int_rf = true;
        inst.ssr_target = target.stream;
        inst.ssr_payload = raw.ssr_payload;
        return inst;
    }
    if (m == "addi") {
        expect_operands(raw, 3);
        Instruction inst;
        inst.kind = InstKind::IntLoopMgmt;
        inst.op = Op::Addi;
        inst.uses_int_rf = true;
        return inst;
    }
    if (m == "bne") {
        expect_operands(raw, 3);
        const auto& target = raw.operands[2];
        if (target != "1b" && target != "1f") {
            throw ConfigError("bne target must be a local label (1b or 1f)");
        }
        Instruction inst;
        inst.kind = InstKind::IntLoopMgmt;
        inst.op = Op::Bne;
        inst.uses_int_rf = true;
        inst.taken_branch = target == "1b";
        return inst;
    }
    if (m == "fmv.x.d") {
        expect_operands(raw, 2);
        auto src = parse_fp_operand(raw.operands[1]);
        if (!src.reg) {
            throw ConfigError("fmv.x.d reads a plain FP register");
        }
        Instruction inst;
        inst.kind = InstKind::Other;
        inst.op = Op::FmvXD;
        inst.uses_int_rf = true;
        inst.acc_reg = src.reg;
        return inst;
    }
    if (m == "barrier") {
        expect_operands(raw, 0);
        Instruction inst;
        inst.kind = InstKind::Other;
        inst.op = Op::Barrier;
        inst.uses_int_rf = true;
        return inst;
    }
    if (m == "nop") {
        expect_operands(raw, 0);
        Instruction inst;
        inst.kind = InstKind::Other;
        inst.op = Op::Nop;
        return inst;
    }
    throw ConfigError("unknown mnemonic '" + m + "'");
}

RawInst to_raw(const Instruction& inst) {
    RawInst raw;
    raw.mnemonic = to_string(inst.op);
    switch (inst.op) {
    case Op::Fmul:
    case Op::Fmadd:
        raw.operands.push_back(inst.writes_stream ? stream_reg_name(*inst.writes_stream)
                                                  : acc_name(inst.dst_reg.value_or(0)));
        raw.operands.push_back("ft0");
        raw.operands.push_back("ft1");
        if (inst.op == Op::Fmadd) {
            raw.operands.push_back(acc_name(inst.acc_reg.value_or(0)));
        }
        break;
    case Op::Frep:
        raw.operands.push_back(std::to_string(inst.frep_payload->max_rpt));
        raw.operands.push_back(std::to_string(inst.frep_payload->max_inst));
        break;
    case Op::Scfgw:
        raw.operands.push_back(stream_reg_name(inst.ssr_target.value_or(StreamId::S0)));
        raw.ssr_payload = inst.ssr_payload;
        break;
    case Op::Addi:
        raw.operands = {"t0", "t0", "1"};
        break;
    case Op::Bne:
        raw.operands = {"t0", "t1", inst.taken_branch ? "1b" : "1f"};
        break;
    case Op::FmvXD:
        raw.operands = {"a0", acc_name(inst.acc_reg.value_or(0))};
        break;
    case Op::Barrier:
    case Op::Nop:
        break;
    }
    return raw;
}

std::string to_asm(const Instruction& inst) {
    auto raw = to_raw(inst);
    std::string out = raw.mnemonic;
    for (std::size_t i = 0; i < raw.operands.size(); ++i) {
        out += (i == 0 ? " " : ", ");
        out += raw.operands[i];
    }
    return out;
}

std::string to_string(InstKind kind) {
    switch (kind) {
    case InstKind::FpCompute: return "FpCompute";
    case InstKind::FrepCfg: return "FrepCfg";
    case InstKind::SsrCfg: return "SsrCfg";
    case InstKind::IntLoopMgmt: return "IntLoopMgmt";
    case InstKind::Other: return "Other";
    }
    return "?";
}

std::string to_string(Op op) {
    switch (op) {
    case Op::Fmul: return "fmul";
    case Op::Fmadd: return "fmadd";
    case Op::Nop: return "nop";
    case Op::Frep: return "frep";
    case Op::Scfgw: return "scfgw";
    case Op::Addi: return "addi";
    case Op::Bne: return "bne";
    case Op::Barrier: return "barrier";
    case Op::FmvXD: return "fmv.x.d";
    }
    return "?";
}

namespace make {

Instruction fmul(std::uint8_t acc) {
    Instruction i;
    i.kind = InstKind::FpCompute;
    i.op = Op::Fmul;
    i.reads_streams = 0b011;
    i.dst_reg = acc;
    return i;
}

Instruction fmadd(std::uint8_t acc) {
    auto i = fmul(acc);
    i.op = Op::Fmadd;
    i.acc_reg = acc;
    return i;
}

Instruction fmadd_wb(std::uint8_t acc) {
    auto i = fmadd(acc);
    i.dst_reg.reset();
    i.writes_stream = StreamId::S2;
    return i;
}

Instruction frep(std::uint32_t max_rpt, std::uint32_t max_inst) {
    return classify(RawInst{"frep", {std::to_string(max_rpt), std::to_string(max_inst)}, std::nullopt});
}

Instruction ssr_cfg(StreamId target, StreamConfig cfg) {
    return classify(RawInst{"scfgw", {stream_reg_name(target)}, std::move(cfg)});
}

Instruction addi() { return classify(parse_asm("addi t0, t0, 1")); }
Instruction bne(bool taken) { return classify(parse_asm(taken ? "bne t0, t1, 1b" : "bne t0, t1, 1f")); }
Instruction barrier() { return classify(parse_asm("barrier")); }
Instruction fmv_x_d(std::uint8_t src) { return classify(parse_asm("fmv.x.d a0, " + acc_name(src))); }
Instruction nop() { return classify(parse_asm("nop")); }

}  // namespace make

}  // namespace clustersim
