#pragma once

// Matmul kernel and tile-schedule generation.
//
// C = A x B with A MxK, B KxN, C MxN, FP64, row-major in main memory
// (A, then B, then C). The problem is cut into tiles of 8 rows of C by
// tile_n columns; K is never tiled. Each core computes one row of the
// tile, unrolled over `unroll` columns of C kept in accumulators c0..c7.
//
// TCDM layout: every matrix of a buffer lives in one superbank (8 adjacent
// banks), stored in 64-byte "chunks" (one row of the superbank):
//   A  chunk k,              lane = row of the tile
//   B  chunk k*CB + j/8,     lane = j%8         (CB = ceil(tile_n / 8))
//   C  chunk r*CB + j/8,     lane = j%8
// so core r always reads lane r of the A group and the cores never meet
// on A. Two buffers alternate between tiles: on Dobu they sit in
// different hyperbanks, on a wide fully-connected TCDM in different
// superbanks, otherwise in different rows of the same superbanks.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "clustersim/isa.hpp"
#include "clustersim/memory.hpp"

namespace clustersim {

enum class KernelVariant : std::uint8_t { BaselineLoop, InnerFrep, ZonlNest };

std::string to_string(KernelVariant v);
KernelVariant parse_variant(const std::string& s);

struct MatmulProblem {
    std::uint32_t M = 32;
    std::uint32_t N = 32;
    std::uint32_t K = 32;
    std::uint32_t tile_m = 8;  ///< rows of C per tile, one per core
    std::uint32_t tile_n = 0;  ///< 0: largest multiple of 8 that fits a group
    std::uint32_t tile_k = 0;  ///< 0 or K; K is not tiled
    std::uint32_t unroll = 8;

    /// Throws ConfigError for K < 2, zero sizes, unroll outside 1..8, a
    /// tile_n that is not a multiple of the unroll, or K tiling.
    void validate(std::uint32_t n_cores) const;

    std::string to_string() const;  ///< "MxNxK"
};

/// Parses "MxNxK".
MatmulProblem parse_size(const std::string& s);

enum class MatrixGroup : std::uint8_t { A = 0, B = 1, C = 2 };

/// Placement of the two buffers' A/B/C groups.
class BufferLayout {
public:
    explicit BufferLayout(const TcdmConfig& cfg);

    /// Address of (chunk, lane) in a group of a buffer.
    std::uint64_t addr(int buffer, MatrixGroup g, std::uint32_t chunk, std::uint32_t lane = 0) const;
    std::uint32_t capacity_chunks() const { return capacity_chunks_; }
    std::uint32_t hyperbank(int buffer) const { return hb_[buffer]; }
    std::uint32_t superbank(int buffer, MatrixGroup g) const;  ///< global superbank index
    std::int64_t chunk_stride() const { return static_cast<std::int64_t>(cfg_.banks_per_hyperbank) * cfg_.word_bytes; }
    const TcdmConfig& config() const { return cfg_; }

private:
    TcdmConfig cfg_;
    std::array<std::uint32_t, 2> hb_{};
    std::array<std::array<std::uint32_t, 3>, 2> sb_in_hb_{};
    std::array<std::uint64_t, 2> row_off_{};
    std::uint32_t capacity_chunks_ = 0;
};

struct TileSpec {
    std::uint32_t index = 0;
    std::uint32_t m0 = 0;
    std::uint32_t rows = 0;  ///< <= tile_m; core c works iff c < rows
    std::uint32_t n0 = 0;
    std::uint32_t tn = 0;
    std::uint32_t unroll = 0;
    std::uint32_t n_tile = 0;
    int buffer = 0;
    bool load_b = true;  ///< B must be brought in for this tile

    std::uint32_t chunks_per_row() const { return (tn + 7) / 8; }
    std::uint32_t outer_iters() const { return tn / unroll; }
};

struct TileSchedule {
    MatmulProblem problem;
    std::vector<TileSpec> tiles;
    /// phases[0] is the prologue, phases[t+1] runs alongside tile t, and
    /// the last entry is the epilogue.
    std::vector<std::vector<DmaDescriptor>> phases;
    std::uint64_t l2_words = 0;  ///< main-memory size: A, B and C back to back

    std::uint64_t a_offset() const { return 0; }
    std::uint64_t b_offset() const { return std::uint64_t{problem.M} * problem.K; }
    std::uint64_t c_offset() const { return b_offset() + std::uint64_t{problem.K} * problem.N; }
};

/// Tiles the problem onto the TCDM and builds the double-buffered DMA
/// phases. Throws ConfigError if a tile cannot fit a matrix group.
TileSchedule gen_schedule(const MatmulProblem& problem, const TcdmConfig& tcdm, std::uint32_t n_cores = 8);

/// FP-side body of one core for one tile: `outer` groups of `unroll`
/// columns with a K-long dot product each.
std::vector<Instruction> gen_kernel_body(std::uint32_t unroll, std::uint32_t outer, std::uint32_t K,
                                         KernelVariant variant);

struct CoreKernel {
    StreamConfig a;
    StreamConfig b;
    StreamConfig c;
    std::vector<Instruction> body;
};

/// Stream patterns and body of core `core` for one tile.
CoreKernel gen_kernel(const TileSpec& tile, std::uint32_t core, std::uint32_t K, const BufferLayout& layout,
                      KernelVariant variant);

/// Whole-run program of one core: an initial barrier, then per tile three
/// stream configurations, the body and a barrier.
std::vector<Instruction> gen_core_program(const TileSchedule& sched, std::uint32_t core, const BufferLayout& layout,
                                          KernelVariant variant);

/// Expands frep loops of a static instruction list into the order the
/// sequencer issues them. Frep configs are dropped.
std::vector<Instruction> expand_frep(const std::vector<Instruction>& program);

struct KernelCounts {
    std::uint64_t fmul = 0;
    std::uint64_t fmadd = 0;
    std::uint64_t fmadd_wb = 0;
    std::uint64_t int_loop = 0;
    std::uint64_t frep = 0;
    std::uint64_t ssr_cfg = 0;
    std::uint64_t other = 0;

    std::uint64_t compute() const { return fmul + fmadd + fmadd_wb; }
    /// Issue slots of the dynamic stream, frep configs excluded.
    std::uint64_t stream_length() const { return compute() + int_loop + ssr_cfg + other; }
};

KernelCounts count_dynamic(const std::vector<Instruction>& program);

/// Assembly-like listing with frep bodies indented.
std::string dump_kernel(const std::vector<Instruction>& program);

/// Deterministic problem data for functional runs.
void fill_inputs(std::vector<double>& l2, const TileSchedule& sched, std::uint64_t seed);

/// Triple loop with the kernel's accumulation order: a*b for k=0, then
/// fma for k=1..K-1.
std::vector<double> reference_matmul(const std::vector<double>& A, const std::vector<double>& B, std::uint32_t M,
                                     std::uint32_t N, std::uint32_t K);

}  // namespace clustersim
