#include "clustersim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace clustersim {

std::string to_string(KernelVariant v) {
    switch (v) {
    case KernelVariant::BaselineLoop: return "baseline-loop";
    case KernelVariant::InnerFrep: return "inner-frep";
    case KernelVariant::ZonlNest: return "zonl-nest";
    }
    return "?";
}

KernelVariant parse_variant(const std::string& s) {
    if (s == "baseline-loop" || s == "BaselineLoop") return KernelVariant::BaselineLoop;
    if (s == "inner-frep" || s == "InnerFrep") return KernelVariant::InnerFrep;
    if (s == "zonl-nest" || s == "ZonlNest") return KernelVariant::ZonlNest;
    throw ConfigError("unknown kernel variant '" + s + "'");
}

void MatmulProblem::validate(std::uint32_t n_cores) const {
    if (M == 0 || N == 0 || K == 0) {
        throw ConfigError("matrix dimensions must be positive");
    }
    if (K < 2) {
        throw ConfigError("K must be at least 2: the first and last iterations are peeled");
    }
    if (tile_m != n_cores) {
        throw ConfigError("tile_m must equal the number of compute cores (one row of C per core)");
    }
    if (tile_k != 0 && tile_k != K) {
        throw ConfigError("tiling along K is not supported");
    }
    if (unroll == 0 || unroll > 8 || 8 % unroll != 0) {
        throw ConfigError("unroll must be 1, 2, 4 or 8");
    }
    if (tile_n != 0 && tile_n % 8 != 0) {
        throw ConfigError("tile_n must be a multiple of 8");
    }
}

std::string MatmulProblem::to_string() const {
    return std::to_string(M) + "x" + std::to_string(N) + "x" + std::to_string(K);
}

MatmulProblem parse_size(const std::string& s) {
    MatmulProblem p;
    std::array<std::uint32_t, 3> v{};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const auto next = i < 2 ? s.find('x', pos) : s.size();
        if (next == std::string::npos || next == pos) {
            throw ConfigError("size must look like MxNxK, got '" + s + "'");
        }
        const auto field = s.substr(pos, next - pos);
        if (field.find_first_not_of("0123456789") != std::string::npos || field.size() > 6) {
            throw ConfigError("size must look like MxNxK, got '" + s + "'");
        }
        v[i] = static_cast<std::uint32_t>(std::stoul(field));
        pos = next + 1;
    }
    p.M = v[0];
    p.N = v[1];
    p.K = v[2];
    return p;
}

BufferLayout::BufferLayout(const TcdmConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const auto spb = cfg_.superbanks_per_hyperbank();
    const auto rows = static_cast<std::uint32_t>(cfg_.bank_words());
    if (cfg_.n_hyperbanks >= 2 && spb >= 3) {
        for (int b = 0; b < 2; ++b) {
            hb_[b] = static_cast<std::uint32_t>(b);
            sb_in_hb_[b] = {0, 1, 2};
        }
        capacity_chunks_ = rows;
    } else if (spb >= 6) {
        const auto half = spb / 2;
        for (int b = 0; b < 2; ++b) {
            sb_in_hb_[b] = {half * b, half * b + 1, half * b + 2};
        }
        capacity_chunks_ = rows;
    } else if (spb >= 3) {
        for (int b = 0; b < 2; ++b) {
            sb_in_hb_[b] = {0, 1, 2};
            row_off_[b] = static_cast<std::uint64_t>(b) * (rows / 2);
        }
        capacity_chunks_ = rows / 2;
    } else {
        throw ConfigError("the TCDM needs at least three superbanks per hyperbank for the matmul layout");
    }
}

std::uint32_t BufferLayout::superbank(int buffer, MatrixGroup g) const {
    return hb_[buffer] * cfg_.superbanks_per_hyperbank() + sb_in_hb_[buffer][static_cast<int>(g)];
}

std::uint64_t BufferLayout::addr(int buffer, MatrixGroup g, std::uint32_t chunk, std::uint32_t lane) const {
    const auto bank = sb_in_hb_[buffer][static_cast<int>(g)] * cfg_.banks_per_superbank + lane;
    return compose_addr(hb_[buffer], bank, row_off_[buffer] + chunk, cfg_);
}

namespace {

// Largest divisor of n that does not exceed limit.
std::uint32_t divisor_at_most(std::uint32_t n, std::uint32_t limit) {
    for (auto d = std::min(n, limit); d > 1; --d) {
        if (n % d == 0) {
            return d;
        }
    }
    return 1;
}

struct NTile {
    std::uint32_t n0;
    std::uint32_t tn;
    std::uint32_t unroll;
};

std::vector<NTile> split_n(const MatmulProblem& p, std::uint32_t tn_max) {
    std::vector<NTile> out;
    std::uint32_t n0 = 0;
    while (n0 < p.N) {
        const auto rem = p.N - n0;
        if (rem >= 8) {
            const auto tn = std::min(tn_max, rem / 8 * 8);
            out.push_back({n0, tn, p.unroll});
            n0 += tn;
        } else {
            // Cleanup columns: fewer accumulators than a full group.
            out.push_back({n0, rem, divisor_at_most(rem, p.unroll)});
            n0 += rem;
        }
    }
    return out;
}

}  // namespace

TileSchedule gen_schedule(const MatmulProblem& problem, const TcdmConfig& tcdm, std::uint32_t n_cores) {
    problem.validate(n_cores);
    const BufferLayout layout(tcdm);
    const auto cap = layout.capacity_chunks();
    const auto& p = problem;

    if (p.K > cap) {
        throw ConfigError("K = " + std::to_string(p.K) + " does not fit a matrix group of " + std::to_string(cap) +
                          " chunks");
    }
    const auto cb_max = std::min(cap / p.K, cap / p.tile_m);
    std::uint32_t tn_max = cb_max * 8;
    if (p.tile_n != 0) {
        if (p.tile_n > tn_max) {
            throw ConfigError("tile_n = " + std::to_string(p.tile_n) + " does not fit a matrix group");
        }
        tn_max = p.tile_n;
    }
    if (tn_max < 8 && p.N >= 8) {
        throw ConfigError("tile does not fit a matrix group");
    }

    TileSchedule s;
    s.problem = p;
    s.l2_words = s.c_offset() + std::uint64_t{p.M} * p.N;

    std::array<int, 2> held_b{-1, -1};
    const auto ntiles = split_n(p, tn_max);
    for (std::uint32_t nt = 0; nt < ntiles.size(); ++nt) {
        for (std::uint32_t m0 = 0; m0 < p.M; m0 += p.tile_m) {
            TileSpec t;
            t.index = static_cast<std::uint32_t>(s.tiles.size());
            t.m0 = m0;
            t.rows = std::min(p.tile_m, p.M - m0);
            t.n0 = ntiles[nt].n0;
            t.tn = ntiles[nt].tn;
            t.unroll = ntiles[nt].unroll;
            t.n_tile = nt;
            t.buffer = static_cast<int>(t.index % 2);
            t.load_b = held_b[t.buffer] != static_cast<int>(nt);
            held_b[t.buffer] = static_cast<int>(nt);
            if (std::uint64_t{p.K} * t.chunks_per_row() > cap) {
                throw ConfigError("B tile does not fit a matrix group");
            }
            s.tiles.push_back(t);
        }
    }

    std::uint32_t next_id = 0;
    const auto stride = layout.chunk_stride();
    auto dma_in_a = [&](const TileSpec& t) {
        DmaDescriptor d;
        d.direction = DmaDirection::ToTcdm;
        d.tcdm_addr = layout.addr(t.buffer, MatrixGroup::A, 0);
        d.beat_stride = stride;
        d.beats = p.K;
        d.l2_index.assign(std::size_t{d.beats} * 8, -1);
        for (std::uint32_t k = 0; k < p.K; ++k) {
            for (std::uint32_t l = 0; l < t.rows; ++l) {
                d.l2_index[k * 8 + l] = static_cast<std::int64_t>(s.a_offset() + std::uint64_t{t.m0 + l} * p.K + k);
            }
        }
        d.id = next_id++;
        return d;
    };
    auto dma_in_b = [&](const TileSpec& t) {
        const auto cb = t.chunks_per_row();
        DmaDescriptor d;
        d.direction = DmaDirection::ToTcdm;
        d.tcdm_addr = layout.addr(t.buffer, MatrixGroup::B, 0);
        d.beat_stride = stride;
        d.beats = p.K * cb;
        d.l2_index.assign(std::size_t{d.beats} * 8, -1);
        for (std::uint32_t k = 0; k < p.K; ++k) {
            for (std::uint32_t j = 0; j < t.tn; ++j) {
                d.l2_index[(k * cb + j / 8) * 8 + j % 8] =
                    static_cast<std::int64_t>(s.b_offset() + std::uint64_t{k} * p.N + t.n0 + j);
            }
        }
        d.id = next_id++;
        return d;
    };
    auto dma_out_c = [&](const TileSpec& t) {
        const auto cb = t.chunks_per_row();
        DmaDescriptor d;
        d.direction = DmaDirection::FromTcdm;
        d.tcdm_addr = layout.addr(t.buffer, MatrixGroup::C, 0);
        d.beat_stride = stride;
        d.beats = t.rows * cb;
        d.l2_index.assign(std::size_t{d.beats} * 8, -1);
        for (std::uint32_t r = 0; r < t.rows; ++r) {
            for (std::uint32_t j = 0; j < t.tn; ++j) {
                d.l2_index[(r * cb + j / 8) * 8 + j % 8] =
                    static_cast<std::int64_t>(s.c_offset() + std::uint64_t{t.m0 + r} * p.N + t.n0 + j);
            }
        }
        d.id = next_id++;
        return d;
    };

    const auto T = s.tiles.size();
    s.phases.resize(T + 2);
    s.phases[0].push_back(dma_in_a(s.tiles[0]));
    s.phases[0].push_back(dma_in_b(s.tiles[0]));
    for (std::size_t t = 0; t < T; ++t) {
        auto& ph = s.phases[t + 1];
        if (t + 1 < T) {
            const auto& nx = s.tiles[t + 1];
            ph.push_back(dma_in_a(nx));
            if (nx.load_b) {
                ph.push_back(dma_in_b(nx));
            }
        }
        if (t >= 1) {
            ph.push_back(dma_out_c(s.tiles[t - 1]));
        }
    }
    s.phases[T + 1].push_back(dma_out_c(s.tiles[T - 1]));
    return s;
}

std::vector<Instruction> gen_kernel_body(std::uint32_t unroll, std::uint32_t outer, std::uint32_t K,
                                         KernelVariant variant) {
    if (K < 2) {
        throw ConfigError("K must be at least 2");
    }
    if (unroll == 0 || unroll > 8 || outer == 0) {
        throw ConfigError("invalid unroll or outer iteration count");
    }
    const auto u = static_cast<std::uint8_t>(unroll);
    auto one_iteration = [&](std::vector<Instruction>& out) {
        for (std::uint8_t r = 0; r < u; ++r) out.push_back(make::fmul(r));
        if (K > 2) {
            out.push_back(make::frep(K - 2, unroll));
            for (std::uint8_t r = 0; r < u; ++r) out.push_back(make::fmadd(r));
        }
        for (std::uint8_t r = 0; r < u; ++r) out.push_back(make::fmadd_wb(r));
    };

    std::vector<Instruction> body;
    switch (variant) {
    case KernelVariant::BaselineLoop:
        for (std::uint32_t g = 0; g < outer; ++g) {
            one_iteration(body);
            body.push_back(make::addi());
            body.push_back(make::bne(true));
        }
        break;
    case KernelVariant::InnerFrep:
        for (std::uint32_t g = 0; g < outer; ++g) {
            one_iteration(body);
        }
        break;
    case KernelVariant::ZonlNest: {
        const std::uint32_t buffered = unroll * (K > 2 ? 3 : 2);
        body.push_back(make::frep(outer, buffered));
        one_iteration(body);
        break;
    }
    }
    std::uint32_t tag = 0;
    for (auto& inst : body) {
        inst.tag = tag++;
    }
    return body;
}

CoreKernel gen_kernel(const TileSpec& tile, std::uint32_t core, std::uint32_t K, const BufferLayout& layout,
                      KernelVariant variant) {
    if (core >= tile.rows) {
        throw ConfigError("core " + std::to_string(core) + " has no row in this tile");
    }
    if (tile.tn % tile.unroll != 0 || (tile.tn > 8 && tile.tn % 8 != 0)) {
        throw ConfigError("tile width must be a multiple of the unroll and of 8 when wider than one chunk");
    }
    const auto u = tile.unroll;
    const auto G = tile.outer_iters();
    const auto cb = tile.chunks_per_row();
    const auto row = layout.chunk_stride();
    const std::int64_t w = 8;

    CoreKernel k;
    k.a.base = layout.addr(tile.buffer, MatrixGroup::A, 0, core);
    k.a.dims = {{u, 0}, {K, row}, {G, 0}};
    k.a.direction = StreamDir::Read;

    k.b.base = layout.addr(tile.buffer, MatrixGroup::B, 0, 0);
    k.c.base = layout.addr(tile.buffer, MatrixGroup::C, core * cb, 0);
    if (tile.tn <= 8) {
        k.b.dims = {{u, w}, {K, cb * row}, {G, u * w}};
        k.c.dims = {{u, w}, {G, u * w}};
    } else if (u == 8) {
        k.b.dims = {{u, w}, {K, cb * row}, {G, row}};
        k.c.dims = {{u, w}, {G, row}};
    } else {
        k.b.dims = {{u, w}, {K, cb * row}, {8 / u, u * w}, {tile.tn / 8, row}};
        k.c.dims = {{u, w}, {8 / u, u * w}, {tile.tn / 8, row}};
    }
    k.b.direction = StreamDir::Read;
    k.c.direction = StreamDir::Write;
    k.body = gen_kernel_body(u, G, K, variant);
    return k;
}

std::vector<Instruction> gen_core_program(const TileSchedule& sched, std::uint32_t core, const BufferLayout& layout,
                                          KernelVariant variant) {
    std::vector<Instruction> prog;
    prog.push_back(make::barrier());
    for (const auto& t : sched.tiles) {
        if (core < t.rows) {
            auto k = gen_kernel(t, core, sched.problem.K, layout, variant);
            prog.push_back(make::ssr_cfg(StreamId::S0, k.a));
            prog.push_back(make::ssr_cfg(StreamId::S1, k.b));
            prog.push_back(make::ssr_cfg(StreamId::S2, k.c));
            prog.insert(prog.end(), k.body.begin(), k.body.end());
        }
        prog.push_back(make::barrier());
    }
    return prog;
}

namespace {

struct Node {
    Instruction inst;
    std::uint32_t rpt = 0;  ///< > 0: frep loop over `body`
    std::vector<Node> body;
};

bool buffered(const Instruction& inst) { return inst.kind != InstKind::FrepCfg && !inst.uses_int_rf; }

// Parses `count` buffered instructions starting at `i` into `out`.
std::size_t parse_body(const std::vector<Instruction>& prog, std::size_t i, std::uint32_t count,
                       std::vector<Node>& out) {
    std::uint32_t got = 0;
    while (got < count) {
        if (i >= prog.size()) {
            throw ConfigError("frep body runs past the end of the program");
        }
        const auto& inst = prog[i];
        if (inst.kind == InstKind::FrepCfg) {
            Node loop{inst, inst.frep_payload->max_rpt, {}};
            if (got + inst.frep_payload->max_inst > count) {
                throw ConfigError("nested frep body extends past its parent");
            }
            i = parse_body(prog, i + 1, inst.frep_payload->max_inst, loop.body);
            got += inst.frep_payload->max_inst;
            out.push_back(std::move(loop));
            continue;
        }
        if (!buffered(inst)) {
            throw ConfigError("integer-side instruction inside an frep body");
        }
        out.push_back({inst, 0, {}});
        ++got;
        ++i;
    }
    return i;
}

std::vector<Node> parse_program(const std::vector<Instruction>& prog) {
    std::vector<Node> top;
    std::size_t i = 0;
    while (i < prog.size()) {
        const auto& inst = prog[i];
        if (inst.kind == InstKind::FrepCfg) {
            Node loop{inst, inst.frep_payload->max_rpt, {}};
            i = parse_body(prog, i + 1, inst.frep_payload->max_inst, loop.body);
            top.push_back(std::move(loop));
        } else {
            top.push_back({inst, 0, {}});
            ++i;
        }
    }
    return top;
}

void emit(const std::vector<Node>& nodes, std::vector<Instruction>& out) {
    for (const auto& n : nodes) {
        if (n.rpt == 0) {
            out.push_back(n.inst);
            continue;
        }
        for (std::uint32_t r = 0; r < n.rpt; ++r) {
            emit(n.body, out);
        }
    }
}

void print(const std::vector<Node>& nodes, int depth, std::ostringstream& os) {
    for (const auto& n : nodes) {
        os << std::string(static_cast<std::size_t>(depth) * 4 + 4, ' ') << to_asm(n.inst) << '\n';
        if (n.rpt > 0) {
            print(n.body, depth + 1, os);
        }
    }
}

}  // namespace

std::vector<Instruction> expand_frep(const std::vector<Instruction>& program) {
    std::vector<Instruction> out;
    emit(parse_program(program), out);
    return out;
}

KernelCounts count_dynamic(const std::vector<Instruction>& program) {
    KernelCounts c;
    for (const auto& inst : program) {
        if (inst.kind == InstKind::FrepCfg) ++c.frep;
    }
    for (const auto& inst : expand_frep(program)) {
        switch (inst.kind) {
        case InstKind::FpCompute:
            if (inst.op == Op::Fmul) ++c.fmul;
            else if (inst.writes_stream) ++c.fmadd_wb;
            else ++c.fmadd;
            break;
        case InstKind::IntLoopMgmt: ++c.int_loop; break;
        case InstKind::SsrCfg: ++c.ssr_cfg; break;
        case InstKind::FrepCfg: break;
        case InstKind::Other: ++c.other; break;
        }
    }
    return c;
}

std::string dump_kernel(const std::vector<Instruction>& program) {
    std::ostringstream os;
    print(parse_program(program), 0, os);
    return os.str();
}

void fill_inputs(std::vector<double>& l2, const TileSchedule& sched, std::uint64_t seed) {
    l2.assign(sched.l2_words, 0.0);
    std::mt19937_64 rng(seed);
    for (std::uint64_t i = 0; i < sched.c_offset(); ++i) {
        // 53 random mantissa bits, mapped to [-1, 1).
        l2[i] = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
    }
}

std::vector<double> reference_matmul(const std::vector<double>& A, const std::vector<double>& B, std::uint32_t M,
                                     std::uint32_t N, std::uint32_t K) {
    std::vector<double> C(std::size_t{M} * N, 0.0);
    for (std::uint32_t i = 0; i < M; ++i) {
        for (std::uint32_t j = 0; j < N; ++j) {
            double acc = A[std::size_t{i} * K] * B[j];
            for (std::uint32_t k = 1; k < K; ++k) {
                acc = std::fma(A[std::size_t{i} * K + k], B[std::size_t{k} * N + j], acc);
            }
            C[std::size_t{i} * N + j] = acc;
        }
    }
    return C;
}

}  // namespace clustersim
