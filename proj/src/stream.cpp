#include "clustersim/stream.hpp"

#include <algorithm>

namespace clustersim {

std::vector<std::uint64_t> expand_addresses(const StreamConfig& cfg) {
    std::vector<std::uint64_t> out;
    out.reserve(cfg.element_count());
    std::vector<std::uint32_t> idx(cfg.dims.size(), 0);
    for (std::uint64_t n = 0; n < cfg.element_count(); ++n) {
        std::int64_t addr = static_cast<std::int64_t>(cfg.base);
        for (std::size_t d = 0; d < idx.size(); ++d) {
            addr += static_cast<std::int64_t>(idx[d]) * cfg.dims[d].stride;
        }
        out.push_back(static_cast<std::uint64_t>(addr));
        for (std::size_t d = 0; d < idx.size(); ++d) {
            if (++idx[d] < cfg.dims[d].bound) {
                break;
            }
            idx[d] = 0;
        }
    }
    return out;
}

std::pair<std::uint64_t, std::uint64_t> address_footprint(const StreamConfig& cfg) {
    std::int64_t lo = static_cast<std::int64_t>(cfg.base);
    std::int64_t hi = lo;
    for (const auto& d : cfg.dims) {
        const std::int64_t span = static_cast<std::int64_t>(d.bound - 1) * d.stride;
        (span < 0 ? lo : hi) += span;
    }
    if (lo < 0) {
        throw ConfigError("stream pattern reaches below address 0");
    }
    return {static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi)};
}

StreamUnit::StreamUnit(StreamId id, std::uint16_t core, StreamParams params, std::optional<std::uint8_t> port)
    : id_(id), core_(core), port_(port.value_or(static_cast<std::uint8_t>(id))), params_(params) {
    if (params_.read_queue_depth == 0 || params_.write_buffer_depth == 0) {
        throw ConfigError("stream queues need at least one entry");
    }
}

void StreamUnit::configure(const StreamConfig& cfg, const TcdmConfig& tcdm) {
    if (!idle()) {
        throw IntegrityFault("stream reconfigured before its previous pattern finished");
    }
    cfg.validate();
    const bool write_port = id_ == StreamId::S2;
    if (write_port != (cfg.direction == StreamDir::Write)) {
        throw ConfigError("stream direction does not match the stream register");
    }
    const auto [lo, hi] = address_footprint(cfg);
    map_addr(lo, tcdm);
    map_addr(hi, tcdm);

    cfg_ = cfg;
    idx_.assign(cfg.dims.size(), 0);
    total_ = cfg.element_count();
    requested_ = 0;
    completed_ = 0;
    queue_.clear();
    pending_.reset();
    conflicts_since_cfg_ = 0;
}

bool StreamUnit::done() const { return cfg_ && completed_ == total_; }

std::uint64_t StreamUnit::current_addr() const {
    std::int64_t addr = static_cast<std::int64_t>(cfg_->base);
    for (std::size_t d = 0; d < idx_.size(); ++d) {
        addr += static_cast<std::int64_t>(idx_[d]) * cfg_->dims[d].stride;
    }
    return static_cast<std::uint64_t>(addr);
}

void StreamUnit::advance_index() {
    for (std::size_t d = 0; d < idx_.size(); ++d) {
        if (++idx_[d] < cfg_->dims[d].bound) {
            return;
        }
        idx_[d] = 0;
    }
}

std::optional<MemRequest> StreamUnit::gen_request(std::uint64_t cycle) {
    if (!cfg_) {
        return std::nullopt;
    }
    if (pending_) {
        return pending_;
    }
    MemRequest req;
    req.requester = Requester::core_port(core_, port_);
    if (cfg_->direction == StreamDir::Read) {
        if (requested_ == total_ || queue_.size() >= params_.read_queue_depth) {
            return std::nullopt;
        }
    } else {
        if (queue_.empty() || queue_.front().ready_cycle > cycle) {
            return std::nullopt;
        }
        req.is_write = true;
        req.wdata = queue_.front().value;
    }
    req.addr = current_addr();
    req.seq = seq_++;
    pending_ = req;
    return pending_;
}

void StreamUnit::on_grant(const MemRequest& req, std::uint64_t cycle, const Tcdm& tcdm) {
    if (!pending_ || pending_->seq != req.seq || pending_->addr != req.addr || !(req.requester == pending_->requester)) {
        throw IntegrityFault("stream grant for a request that was not issued");
    }
    pending_.reset();
    ++granted_;
    ++requested_;
    advance_index();
    if (cfg_->direction == StreamDir::Read) {
        queue_.push_back({tcdm.read_word(req.addr), cycle + params_.mem_latency});
    } else {
        queue_.pop_front();
        ++completed_;
    }
}

void StreamUnit::on_conflict(const MemRequest& req) {
    if (!pending_ || pending_->seq != req.seq) {
        throw IntegrityFault("stream conflict for a request that was not issued");
    }
    ++conflicts_;
    ++conflicts_since_cfg_;
}

bool StreamUnit::data_ready(std::uint64_t cycle) const {
    return cfg_ && cfg_->direction == StreamDir::Read && !queue_.empty() && queue_.front().ready_cycle <= cycle;
}

double StreamUnit::pop(std::uint64_t cycle) {
    if (!data_ready(cycle)) {
        throw IntegrityFault("FPU consumed a stream element that has not arrived");
    }
    const double v = queue_.front().value;
    queue_.pop_front();
    ++completed_;
    return v;
}

bool StreamUnit::can_accept() const {
    return cfg_ && cfg_->direction == StreamDir::Write && queue_.size() < params_.write_buffer_depth &&
           completed_ + queue_.size() < total_;
}

void StreamUnit::push_result(double value, std::uint64_t ready_cycle) {
    if (!can_accept()) {
        throw IntegrityFault("write stream overflow");
    }
    queue_.push_back({value, ready_cycle});
}

}  // namespace clustersim
