#include "clustersim/memory.hpp"

#include <algorithm>

namespace clustersim {

std::string to_string(Interconnect ic) {
    return ic == Interconnect::Dobu ? "dobu" : "fc";
}

std::string to_string(ArbitrationPolicy p) {
    switch (p) {
    case ArbitrationPolicy::RoundRobin: return "round-robin";
    case ArbitrationPolicy::DmaPriority: return "dma-priority";
    case ArbitrationPolicy::CorePriority: return "core-priority";
    }
    return "?";
}

Interconnect parse_interconnect(const std::string& s) {
    if (s == "fc" || s == "fully-connected" || s == "FullyConnected") return Interconnect::FullyConnected;
    if (s == "dobu" || s == "db" || s == "Dobu") return Interconnect::Dobu;
    throw ConfigError("unknown interconnect '" + s + "'");
}

ArbitrationPolicy parse_policy(const std::string& s) {
    if (s == "round-robin" || s == "rr") return ArbitrationPolicy::RoundRobin;
    if (s == "dma-priority") return ArbitrationPolicy::DmaPriority;
    if (s == "core-priority") return ArbitrationPolicy::CorePriority;
    throw ConfigError("unknown arbitration policy '" + s + "'");
}

std::string to_string(const Requester& r) {
    if (r.is_dma()) {
        return "dma";
    }
    return "core" + std::to_string(r.core) + ".p" + std::to_string(r.port);
}

void TcdmConfig::validate() const {
    if (word_bytes != 8) {
        throw ConfigError("only 64-bit TCDM words are modelled");
    }
    if (n_hyperbanks == 0 || banks_per_hyperbank == 0 || n_banks != banks_per_hyperbank * n_hyperbanks) {
        throw ConfigError("n_banks must equal banks_per_hyperbank * n_hyperbanks");
    }
    if (interconnect == Interconnect::FullyConnected && n_hyperbanks != 1) {
        throw ConfigError("a fully-connected TCDM has exactly one hyperbank");
    }
    if (banks_per_superbank == 0 || banks_per_hyperbank % banks_per_superbank != 0) {
        throw ConfigError("hyperbank width must be a multiple of the superbank width");
    }
    if (banks_per_superbank * word_bytes != 64) {
        throw ConfigError("a superbank must be exactly one 512-bit DMA beat wide");
    }
    if (total_bytes == 0 || total_bytes % (std::uint64_t{n_banks} * word_bytes) != 0) {
        throw ConfigError("TCDM capacity must be a whole number of rows across all banks");
    }
}

TcdmConfig TcdmConfig::fc32() { return {128 * 1024, 32, 32, 1, 8, Interconnect::FullyConnected, 8}; }
TcdmConfig TcdmConfig::fc64() { return {128 * 1024, 64, 64, 1, 8, Interconnect::FullyConnected, 8}; }
TcdmConfig TcdmConfig::dobu64() { return {128 * 1024, 64, 32, 2, 8, Interconnect::Dobu, 8}; }
TcdmConfig TcdmConfig::dobu48() { return {96 * 1024, 48, 24, 2, 8, Interconnect::Dobu, 8}; }

BankLocation map_addr(std::uint64_t addr, const TcdmConfig& cfg) {
    if (addr % cfg.word_bytes != 0) {
        throw ConfigError("unaligned TCDM address " + std::to_string(addr));
    }
    if (addr >= cfg.total_bytes) {
        throw ConfigError("TCDM address " + std::to_string(addr) + " out of range");
    }
    const auto hb_bytes = cfg.hyperbank_bytes();
    const auto hb = static_cast<std::uint32_t>(addr / hb_bytes);
    const auto word = (addr % hb_bytes) / cfg.word_bytes;
    const auto bank_in_hb = static_cast<std::uint32_t>(word % cfg.banks_per_hyperbank);
    return {hb, hb * cfg.banks_per_hyperbank + bank_in_hb, word / cfg.banks_per_hyperbank};
}

std::uint64_t compose_addr(std::uint32_t hyperbank, std::uint32_t bank_in_hyperbank, std::uint64_t row,
                           const TcdmConfig& cfg) {
    return hyperbank * cfg.hyperbank_bytes() + (row * cfg.banks_per_hyperbank + bank_in_hyperbank) * cfg.word_bytes;
}

Tcdm::Tcdm(TcdmConfig cfg, ArbitrationPolicy policy, bool functional)
    : cfg_(cfg), policy_(policy), functional_(functional) {
    cfg_.validate();
    if (functional_) {
        data_.assign(cfg_.total_bytes / cfg_.word_bytes, 0.0);
    }
    rr_next_.assign(cfg_.n_banks, 0);
    superbank_dma_turn_.assign(cfg_.n_banks / cfg_.banks_per_superbank, false);
    conflicts_per_bank_.assign(cfg_.n_banks, 0);
    bank_reqs_.resize(cfg_.n_banks);
    dma_claim_.assign(cfg_.n_banks, -1);
}

void Tcdm::reset_counters() {
    std::fill(conflicts_per_bank_.begin(), conflicts_per_bank_.end(), 0);
    total_conflicts_ = 0;
    conflict_cycles_ = 0;
}

std::uint32_t Tcdm::port_key(const Requester& r) const { return std::uint32_t{r.core} * 8 + r.port; }

double Tcdm::read_word(std::uint64_t addr) const {
    if (!functional_) {
        return 0.0;
    }
    map_addr(addr, cfg_);
    return data_[addr / cfg_.word_bytes];
}

void Tcdm::write_word(std::uint64_t addr, double value) {
    if (!functional_) {
        return;
    }
    map_addr(addr, cfg_);
    data_[addr / cfg_.word_bytes] = value;
}

ArbitrationResult Tcdm::arbitrate(std::uint64_t cycle, std::span<const MemRequest> requests) {
    ArbitrationResult result;
    result.granted.assign(requests.size(), false);

    std::vector<std::uint32_t> touched;
    auto touch = [&](std::uint32_t bank) {
        if (bank_reqs_[bank].empty() && dma_claim_[bank] < 0) {
            touched.push_back(bank);
        }
    };

    std::vector<std::uint32_t> dma_reqs;
    for (std::uint32_t i = 0; i < requests.size(); ++i) {
        const auto& req = requests[i];
        const auto loc = map_addr(req.addr, cfg_);
        if (req.is_dma()) {
            if (loc.bank % cfg_.banks_per_superbank != 0) {
                throw ConfigError("DMA beat not aligned to a superbank");
            }
            dma_reqs.push_back(i);
            continue;
        }
        touch(loc.bank);
        bank_reqs_[loc.bank].push_back(i);
    }

    // Superbank mux: DMA branch against the core branch.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dma_losers;  // (request, bank it is reported on)
    for (auto di : dma_reqs) {
        const auto first = map_addr(requests[di].addr, cfg_).bank;
        const auto sb = first / cfg_.banks_per_superbank;
        bool cores_present = false;
        bool other_dma = false;
        std::uint32_t contested_bank = first;
        for (std::uint32_t b = first + cfg_.banks_per_superbank; b-- > first;) {
            const bool busy = !bank_reqs_[b].empty() || dma_claim_[b] >= 0;
            cores_present = cores_present || !bank_reqs_[b].empty();
            other_dma = other_dma || dma_claim_[b] >= 0;
            if (busy) {
                contested_bank = b;
            }
        }
        bool dma_wins = !other_dma;
        if (dma_wins && cores_present) {
            switch (policy_) {
            case ArbitrationPolicy::RoundRobin:
                dma_wins = superbank_dma_turn_[sb];
                superbank_dma_turn_[sb] = !dma_wins;
                break;
            case ArbitrationPolicy::DmaPriority: dma_wins = true; break;
            case ArbitrationPolicy::CorePriority: dma_wins = false; break;
            }
        }
        if (dma_wins) {
            for (std::uint32_t b = first; b < first + cfg_.banks_per_superbank; ++b) {
                touch(b);
                dma_claim_[b] = static_cast<std::int32_t>(di);
            }
            result.granted[di] = true;
        } else {
            dma_losers.emplace_back(di, contested_bank);
        }
    }

    // Per-bank round-robin among core ports.
    std::sort(touched.begin(), touched.end());
    for (auto bank : touched) {
        auto& reqs = bank_reqs_[bank];
        BankGrant grant;
        grant.bank = bank;
        if (dma_claim_[bank] >= 0) {
            grant.winner = Requester::dma();
            for (auto ri : reqs) {
                grant.losers.push_back(requests[ri].requester);
            }
        } else {
            std::uint32_t best = reqs.front();
            std::uint32_t best_rank = UINT32_MAX;
            const std::uint32_t ring = 65536U * 8U;
            for (auto ri : reqs) {
                const auto key = port_key(requests[ri].requester);
                const auto rank = (key + ring - rr_next_[bank]) % ring;
                if (rank < best_rank) {
                    best_rank = rank;
                    best = ri;
                }
            }
            result.granted[best] = true;
            grant.winner = requests[best].requester;
            rr_next_[bank] = port_key(grant.winner) + 1;
            for (auto ri : reqs) {
                if (ri != best) {
                    grant.losers.push_back(requests[ri].requester);
                }
            }
            const auto& win = requests[best];
            if (win.is_write && functional_) {
                data_[win.addr / cfg_.word_bytes] = win.wdata;
            }
        }
        // A DMA beat that lost its superbank is reported on the lowest
        // contested bank.
        for (const auto& [di, lost_on] : dma_losers) {
            if (lost_on == bank) {
                grant.losers.push_back(Requester::dma());
            }
        }
        if (!grant.losers.empty()) {
            conflicts_per_bank_[bank] += grant.losers.size();
            result.conflicts += static_cast<std::uint32_t>(grant.losers.size());
            if (trace_) {
                trace_({cycle, bank, grant.winner, static_cast<std::uint32_t>(grant.losers.size())});
            }
        }
        result.grants.push_back(std::move(grant));
        reqs.clear();
        dma_claim_[bank] = -1;
    }

    total_conflicts_ += result.conflicts;
    if (result.conflicts > 0) {
        ++conflict_cycles_;
    }
    return result;
}

}  // namespace clustersim
