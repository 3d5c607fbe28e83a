#pragma once

// Stream registers: affine address generators in front of the FPU.
//
// A read stream prefetches elements into a small queue; the FPU pops one
// element per consuming instruction. A write stream buffers FPU results
// (including those still in flight in the pipeline) and drains them to
// memory once the result is available. Each unit owns one TCDM port and
// issues at most one request per cycle; a losing request is retried
// unchanged.

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "clustersim/isa.hpp"
#include "clustersim/memory.hpp"

namespace clustersim {

/// Reference expansion of a stream pattern, innermost dimension first.
std::vector<std::uint64_t> expand_addresses(const StreamConfig& cfg);

/// Lowest and highest byte address touched by the pattern.
std::pair<std::uint64_t, std::uint64_t> address_footprint(const StreamConfig& cfg);

struct StreamParams {
    std::uint32_t read_queue_depth = 4;
    std::uint32_t mem_latency = 1;       ///< grant cycle -> data usable
    std::uint32_t write_buffer_depth = 7;  ///< results, counting those still in the FPU
};

class StreamUnit {
public:
    /// `port` defaults to the stream index; synthetic set-ups may give
    /// extra units their own port number.
    StreamUnit(StreamId id, std::uint16_t core, StreamParams params = {}, std::optional<std::uint8_t> port = {});

    /// Loads a new pattern. Throws ConfigError if the footprint leaves the
    /// TCDM, and IntegrityFault if the previous pattern is not finished.
    void configure(const StreamConfig& cfg, const TcdmConfig& tcdm);

    bool configured() const { return cfg_.has_value(); }
    /// Every element has been consumed (read) or written back (write).
    bool done() const;
    /// Nothing outstanding: not configured, or done.
    bool idle() const { return !cfg_ || done(); }

    std::optional<MemRequest> gen_request(std::uint64_t cycle);
    void on_grant(const MemRequest& req, std::uint64_t cycle, const Tcdm& tcdm);
    void on_conflict(const MemRequest& req);

    // Read side
    bool data_ready(std::uint64_t cycle) const;
    double pop(std::uint64_t cycle);

    // Write side
    bool can_accept() const;
    void push_result(double value, std::uint64_t ready_cycle);

    StreamId id() const { return id_; }
    StreamDir direction() const { return cfg_ ? cfg_->direction : StreamDir::Read; }
    std::uint32_t queue_occupancy() const { return static_cast<std::uint32_t>(queue_.size()) + (pending_ ? 1U : 0U); }
    std::uint64_t requested() const { return requested_; }
    std::uint64_t total_elements() const { return total_; }
    std::uint64_t conflicts() const { return conflicts_; }
    /// Conflicts seen since the current pattern was configured.
    std::uint64_t conflicts_since_config() const { return conflicts_since_cfg_; }
    std::uint64_t requests_granted() const { return granted_; }

private:
    std::uint64_t current_addr() const;
    void advance_index();

    StreamId id_;
    std::uint16_t core_;
    std::uint8_t port_;
    StreamParams params_;
    std::optional<StreamConfig> cfg_;
    std::vector<std::uint32_t> idx_;
    std::uint64_t total_ = 0;
    std::uint64_t requested_ = 0;  ///< elements whose request has been granted
    std::uint64_t completed_ = 0;  ///< elements consumed (read) / written (write)

    struct Slot {
        double value;
        std::uint64_t ready_cycle;
    };
    std::deque<Slot> queue_;  ///< read: fetched data; write: results awaiting drain
    std::optional<MemRequest> pending_;
    std::uint64_t seq_ = 0;
    std::uint64_t conflicts_ = 0;
    std::uint64_t conflicts_since_cfg_ = 0;
    std::uint64_t granted_ = 0;
};

}  // namespace clustersim
