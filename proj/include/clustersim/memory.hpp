#pragma once

// Multi-banked TCDM with single-ported banks.
//
// Two interconnect flavours are modelled:
//  - FullyConnected: one hyperbank, word-interleaved across all banks.
//  - Dobu: n_hyperbanks contiguous address regions, each interleaved
//    across its own banks; a demux after the crossbar picks the hyperbank.
// Cores issue 64-bit requests, the DMA issues 512-bit beats that occupy a
// whole superbank (8 adjacent banks). A mux per superbank arbitrates the
// DMA branch against the core branch; within the core branch every bank
// arbitrates round-robin among the requesting ports.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clustersim/error.hpp"

namespace clustersim {

enum class Interconnect : std::uint8_t { FullyConnected, Dobu };
enum class ArbitrationPolicy : std::uint8_t { RoundRobin, DmaPriority, CorePriority };

std::string to_string(Interconnect ic);
std::string to_string(ArbitrationPolicy p);
Interconnect parse_interconnect(const std::string& s);
ArbitrationPolicy parse_policy(const std::string& s);

struct TcdmConfig {
    std::uint64_t total_bytes = 128 * 1024;
    std::uint32_t n_banks = 32;
    std::uint32_t banks_per_hyperbank = 32;
    std::uint32_t n_hyperbanks = 1;
    std::uint32_t banks_per_superbank = 8;
    Interconnect interconnect = Interconnect::FullyConnected;
    std::uint32_t word_bytes = 8;

    std::uint64_t hyperbank_bytes() const { return total_bytes / n_hyperbanks; }
    std::uint64_t bank_words() const { return total_bytes / word_bytes / n_banks; }
    std::uint32_t superbanks_per_hyperbank() const { return banks_per_hyperbank / banks_per_superbank; }
    std::uint32_t superbank_bytes_per_row() const { return banks_per_superbank * word_bytes; }

    void validate() const;

    static TcdmConfig fc32();     ///< 128 KiB, 32 banks, fully connected (baseline)
    static TcdmConfig fc64();     ///< 128 KiB, 64 banks, fully connected
    static TcdmConfig dobu64();   ///< 128 KiB, 2 hyperbanks x 32 banks
    static TcdmConfig dobu48();   ///< 96 KiB, 2 hyperbanks x 24 banks

    bool operator==(const TcdmConfig&) const = default;
};

struct BankLocation {
    std::uint32_t hyperbank = 0;
    std::uint32_t bank = 0;  ///< global bank index: hyperbank * banks_per_hyperbank + bank in hyperbank
    std::uint64_t row = 0;

    std::uint32_t bank_in_hyperbank(const TcdmConfig& cfg) const { return bank % cfg.banks_per_hyperbank; }
    bool operator==(const BankLocation&) const = default;
};

/// Address decoding. Throws ConfigError for unaligned or out-of-range
/// addresses.
BankLocation map_addr(std::uint64_t addr, const TcdmConfig& cfg);

/// Inverse of map_addr.
std::uint64_t compose_addr(std::uint32_t hyperbank, std::uint32_t bank_in_hyperbank, std::uint64_t row,
                           const TcdmConfig& cfg);

struct Requester {
    enum class Kind : std::uint8_t { Core, Dma };
    Kind kind = Kind::Core;
    std::uint16_t core = 0;
    std::uint8_t port = 0;

    static Requester core_port(std::uint16_t core, std::uint8_t port) { return {Kind::Core, core, port}; }
    static Requester dma() { return {Kind::Dma, 0, 0}; }
    bool is_dma() const { return kind == Kind::Dma; }
    bool operator==(const Requester&) const = default;
};

std::string to_string(const Requester& r);

struct MemRequest {
    Requester requester;
    std::uint64_t addr = 0;
    bool is_write = false;
    std::uint32_t width_bits = 64;
    double wdata = 0.0;      ///< 64-bit writes only; DMA data moves via the DMA engine
    std::uint64_t seq = 0;   ///< per-requester sequence number, used for integrity checks

    bool is_dma() const { return requester.is_dma(); }
};

struct BankGrant {
    std::uint32_t bank = 0;
    Requester winner;
    std::vector<Requester> losers;
};

struct ArbitrationResult {
    std::vector<bool> granted;      ///< parallel to the request list
    std::vector<BankGrant> grants;  ///< one entry per bank that saw at least one request
    std::uint32_t conflicts = 0;    ///< number of losing requests
};

struct ConflictTraceRecord {
    std::uint64_t cycle;
    std::uint32_t bank;
    Requester winner;
    std::uint32_t n_losers;
};

/// Bank array plus interconnect. Holds the TCDM contents (as FP64 words)
/// when functional mode is on.
class Tcdm {
public:
    Tcdm(TcdmConfig cfg, ArbitrationPolicy policy, bool functional = false);

    const TcdmConfig& config() const { return cfg_; }

    /// Arbitrates one cycle worth of requests. Each bank grants at most one
    /// requester; a DMA beat wins or loses all 8 banks of its superbank.
    /// Core-vs-core write data is committed for granted writes.
    ArbitrationResult arbitrate(std::uint64_t cycle, std::span<const MemRequest> requests);

    double read_word(std::uint64_t addr) const;
    void write_word(std::uint64_t addr, double value);
    bool functional() const { return functional_; }

    std::uint64_t total_conflicts() const { return total_conflicts_; }
    std::uint64_t conflict_cycles() const { return conflict_cycles_; }
    const std::vector<std::uint64_t>& conflicts_per_bank() const { return conflicts_per_bank_; }
    void reset_counters();

    void set_conflict_trace(std::function<void(const ConflictTraceRecord&)> hook) { trace_ = std::move(hook); }

private:
    std::uint32_t port_key(const Requester& r) const;

    TcdmConfig cfg_;
    ArbitrationPolicy policy_;
    bool functional_;
    std::vector<double> data_;
    std::vector<std::uint32_t> rr_next_;        ///< per bank: port key that has priority next
    std::vector<bool> superbank_dma_turn_;      ///< per superbank: DMA wins the next contested cycle
    std::vector<std::uint64_t> conflicts_per_bank_;
    std::uint64_t total_conflicts_ = 0;
    std::uint64_t conflict_cycles_ = 0;
    std::function<void(const ConflictTraceRecord&)> trace_;

    // scratch, reused across cycles
    std::vector<std::vector<std::uint32_t>> bank_reqs_;
    std::vector<std::int32_t> dma_claim_;
};

// ---------------------------------------------------------------------------
// DMA

enum class DmaDirection : std::uint8_t { ToTcdm, FromTcdm };

/// A burst of superbank beats. Beat b covers TCDM bytes
/// [tcdm_addr + b * beat_stride, +64) and main-memory words
/// l2_index[8b .. 8b+8) (negative entries are padding).
struct DmaDescriptor {
    DmaDirection direction = DmaDirection::ToTcdm;
    std::uint64_t tcdm_addr = 0;
    std::int64_t beat_stride = 64;
    std::uint32_t beats = 0;
    std::vector<std::int64_t> l2_index;
    std::uint32_t id = 0;

    std::uint64_t len_bytes() const { return std::uint64_t{beats} * 64; }
    std::uint64_t beat_addr(std::uint32_t b) const {
        return static_cast<std::uint64_t>(static_cast<std::int64_t>(tcdm_addr) + beat_stride * b);
    }
};

struct DmaCompletion {
    std::uint32_t id;
    std::uint64_t cycle;
};

/// Single-channel DMA engine: one 512-bit beat request per cycle, retried
/// whole on conflict. Main memory is an ideal backing store.
class DmaEngine {
public:
    DmaEngine(Tcdm& tcdm, std::vector<double>* main_memory);

    /// Queues a transfer. Throws ConfigError if any beat is not
    /// superbank-aligned or lies outside the TCDM.
    void dma_transfer(DmaDescriptor desc);

    std::optional<MemRequest> gen_request(std::uint64_t cycle);
    void on_grant(const MemRequest& req, std::uint64_t cycle);
    void on_conflict(const MemRequest& req);

    bool busy() const { return !queue_.empty(); }
    std::uint64_t busy_cycles() const { return busy_cycles_; }
    std::uint64_t beats_done() const { return beats_done_; }
    std::uint64_t conflicts() const { return conflicts_; }
    const std::vector<DmaCompletion>& completions() const { return completions_; }

private:
    Tcdm& tcdm_;
    std::vector<double>* l2_;
    std::deque<DmaDescriptor> queue_;
    std::uint32_t beat_ = 0;
    std::optional<MemRequest> pending_;
    std::uint64_t seq_ = 0;
    std::uint64_t busy_cycles_ = 0;
    std::uint64_t beats_done_ = 0;
    std::uint64_t conflicts_ = 0;
    std::vector<DmaCompletion> completions_;
};

}  // namespace clustersim
