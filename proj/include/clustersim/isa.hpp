#pragma once

// Abstract instruction model consumed by the FREP sequencer and the cores.
//
// Instructions are structured records, not binary encodings. Register
// naming follows the optimized GEMM kernel: ft0/ft1 are the two read
// stream registers, ft2 is the write stream register, c0..c15 are plain
// FP registers used as accumulators.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clustersim {

enum class InstKind : std::uint8_t { FpCompute, FrepCfg, SsrCfg, IntLoopMgmt, Other };

enum class Op : std::uint8_t {
    Fmul,
    Fmadd,
    Nop,
    Frep,
    Scfgw,
    Addi,
    Bne,
    Barrier,
    FmvXD,
};

/// Stream registers per core: two read streams and one write stream.
enum class StreamId : std::uint8_t { S0 = 0, S1 = 1, S2 = 2 };
inline constexpr int kStreamsPerCore = 3;

enum class StreamDir : std::uint8_t { Read, Write };

struct FrepConfig {
    std::uint32_t max_inst = 1;  ///< instructions in the loop body, inner bodies counted once
    std::uint32_t max_rpt = 1;   ///< iteration count

    bool operator==(const FrepConfig&) const = default;
};

/// One level of an affine address pattern.
struct StreamDim {
    std::uint32_t bound = 1;
    std::int64_t stride = 0;  ///< bytes

    bool operator==(const StreamDim&) const = default;
};

inline constexpr int kMaxStreamDims = 4;

/// Up to 4 nested affine levels, innermost first:
/// addr = base + sum(idx[d] * stride[d]).
struct StreamConfig {
    std::uint64_t base = 0;
    std::vector<StreamDim> dims;
    StreamDir direction = StreamDir::Read;

    std::uint64_t element_count() const;
    /// Throws ConfigError if there are more than 4 dims, a zero bound, or
    /// an unaligned base/stride.
    void validate() const;

    bool operator==(const StreamConfig&) const = default;
};

struct Instruction {
    InstKind kind = InstKind::Other;
    Op op = Op::Nop;
    std::uint8_t reads_streams = 0;  ///< bitmask over StreamId
    std::optional<StreamId> writes_stream;
    bool uses_int_rf = false;
    std::optional<FrepConfig> frep_payload;

    std::optional<std::uint8_t> dst_reg;  ///< FP destination register (accumulator)
    std::optional<std::uint8_t> acc_reg;  ///< FP register read as addend

    /// SsrCfg: which stream is (re)configured and with what pattern.
    std::optional<StreamId> ssr_target;
    std::optional<StreamConfig> ssr_payload;

    /// IntLoopMgmt branches: redirects fetch and pays the branch penalty.
    bool taken_branch = false;

    /// Free-form id carried through the pipeline for traces and tests.
    /// Not part of the assembly form.
    std::uint32_t tag = 0;

    bool reads(StreamId s) const { return (reads_streams >> static_cast<int>(s)) & 1U; }
    int stream_read_count() const;

    bool operator==(const Instruction&) const = default;
};

/// An unclassified instruction as it would be written in an assembly
/// listing. The SSR payload cannot be spelled in one line of assembly, so
/// it travels next to the text.
struct RawInst {
    std::string mnemonic;
    std::vector<std::string> operands;
    std::optional<StreamConfig> ssr_payload;

    bool operator==(const RawInst&) const = default;
};

/// Splits "fmadd ft2, ft0, ft1, c3" into mnemonic and operands.
RawInst parse_asm(const std::string& line);

/// Partially decodes an instruction and bins it into one InstKind.
/// Throws ConfigError for malformed descriptors (unknown mnemonic, wrong
/// operand count, FREP with a zero field, ...).
Instruction classify(const RawInst& raw);

/// Inverse of classify for every kind the simulator models.
RawInst to_raw(const Instruction& inst);

std::string to_asm(const Instruction& inst);
std::string to_string(InstKind kind);
std::string to_string(Op op);

// Convenience builders used by the kernel generator and tests.
namespace make {
Instruction fmul(std::uint8_t acc);
Instruction fmadd(std::uint8_t acc);
Instruction fmadd_wb(std::uint8_t acc);
Instruction frep(std::uint32_t max_rpt, std::uint32_t max_inst);
Instruction ssr_cfg(StreamId target, StreamConfig cfg);
Instruction addi();
Instruction bne(bool taken);
Instruction barrier();
Instruction fmv_x_d(std::uint8_t src);
Instruction nop();
}  // namespace make

}  // namespace clustersim
