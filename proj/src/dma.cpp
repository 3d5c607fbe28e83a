#include "clustersim/memory.hpp"

namespace clustersim {

DmaEngine::DmaEngine(Tcdm& tcdm, std::vector<double>* main_memory) : tcdm_(tcdm), l2_(main_memory) {}

void DmaEngine::dma_transfer(DmaDescriptor desc) {
    const auto& cfg = tcdm_.config();
    if (desc.beats == 0) {
        return;
    }
    if (desc.beat_stride % 64 != 0) {
        throw ConfigError("DMA beat stride must be a multiple of 64 bytes");
    }
    for (std::uint32_t b : {0U, desc.beats - 1}) {
        const auto addr = static_cast<std::int64_t>(desc.tcdm_addr) + desc.beat_stride * b;
        if (addr < 0) {
            throw ConfigError("DMA descriptor runs below the TCDM base");
        }
        const auto loc = map_addr(static_cast<std::uint64_t>(addr), cfg);
        if (loc.bank % cfg.banks_per_superbank != 0) {
            throw ConfigError("DMA descriptor is not superbank-aligned");
        }
    }
    if (l2_ != nullptr && tcdm_.functional() && desc.l2_index.size() != std::size_t{desc.beats} * 8) {
        throw ConfigError("DMA descriptor needs 8 main-memory indices per beat in functional mode");
    }
    queue_.push_back(std::move(desc));
}

std::optional<MemRequest> DmaEngine::gen_request(std::uint64_t) {
    if (queue_.empty()) {
        return std::nullopt;
    }
    ++busy_cycles_;
    if (!pending_) {
        const auto& d = queue_.front();
        MemRequest req;
        req.requester = Requester::dma();
        req.addr = d.beat_addr(beat_);
        req.is_write = d.direction == DmaDirection::ToTcdm;
        req.width_bits = 512;
        req.seq = seq_++;
        pending_ = req;
    }
    return pending_;
}

void DmaEngine::on_grant(const MemRequest& req, std::uint64_t cycle) {
    if (!pending_ || pending_->seq != req.seq || pending_->addr != req.addr) {
        throw IntegrityFault("DMA grant for a beat that was not requested");
    }
    auto& d = queue_.front();
    if (tcdm_.functional() && l2_ != nullptr) {
        for (std::uint32_t w = 0; w < 8; ++w) {
            const auto l2 = d.l2_index[std::size_t{beat_} * 8 + w];
            if (l2 < 0) {
                continue;
            }
            const auto addr = req.addr + w * 8;
            if (d.direction == DmaDirection::ToTcdm) {
                tcdm_.write_word(addr, (*l2_)[static_cast<std::size_t>(l2)]);
            } else {
                (*l2_)[static_cast<std::size_t>(l2)] = tcdm_.read_word(addr);
            }
        }
    }
    pending_.reset();
    ++beats_done_;
    if (++beat_ == d.beats) {
        completions_.push_back({d.id, cycle});
        queue_.pop_front();
        beat_ = 0;
    }
}

void DmaEngine::on_conflict(const MemRequest& req) {
    if (!pending_ || pending_->seq != req.seq) {
        throw IntegrityFault("DMA conflict for a beat that was not requested");
    }
    ++conflicts_;
}

}  // namespace clustersim
