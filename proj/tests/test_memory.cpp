#include "doctest.h"

#include <random>
#include <set>

#include "clustersim/memory.hpp"

using namespace clustersim;

namespace {

MemRequest core_read(std::uint16_t core, std::uint8_t port, std::uint64_t addr) {
    MemRequest r;
    r.requester = Requester::core_port(core, port);
    r.addr = addr;
    return r;
}

MemRequest dma_beat(std::uint64_t addr) {
    MemRequest r;
    r.requester = Requester::dma();
    r.addr = addr;
    r.width_bits = 512;
    return r;
}

}  // namespace

TEST_SUITE("memory") {

TEST_CASE("presets") {
    CHECK(TcdmConfig::fc32().n_banks == 32);
    CHECK(TcdmConfig::fc64().n_banks == 64);
    CHECK(TcdmConfig::dobu64().n_hyperbanks == 2);
    CHECK(TcdmConfig::dobu48().total_bytes == 96 * 1024);
    CHECK(TcdmConfig::dobu48().superbanks_per_hyperbank() == 3);
    for (auto c : {TcdmConfig::fc32(), TcdmConfig::fc64(), TcdmConfig::dobu64(), TcdmConfig::dobu48()}) {
        CHECK_NOTHROW(c.validate());
        CHECK(c.bank_words() * c.n_banks * c.word_bytes == c.total_bytes);
    }
}

TEST_CASE("address map is a bijection with compose_addr as inverse") {
    for (auto cfg : {TcdmConfig::fc32(), TcdmConfig::dobu64(), TcdmConfig::dobu48()}) {
        std::set<std::pair<std::uint32_t, std::uint64_t>> seen;
        for (std::uint64_t a = 0; a < cfg.total_bytes; a += cfg.word_bytes) {
            const auto loc = map_addr(a, cfg);
            REQUIRE(loc.bank < cfg.n_banks);
            REQUIRE(loc.row < cfg.bank_words());
            REQUIRE(loc.bank / cfg.banks_per_hyperbank == loc.hyperbank);
            REQUIRE(seen.insert({loc.bank, loc.row}).second);
            REQUIRE(compose_addr(loc.hyperbank, loc.bank_in_hyperbank(cfg), loc.row, cfg) == a);
        }
        CHECK(seen.size() == cfg.n_banks * cfg.bank_words());
    }
    const auto d = TcdmConfig::dobu64();
    CHECK(map_addr(0, d).hyperbank == 0);
    CHECK(map_addr(64 * 1024, d).hyperbank == 1);
    CHECK(map_addr(64 * 1024, d).bank == 32);
    CHECK(map_addr(8 * 33, TcdmConfig::fc32()) == BankLocation{0, 1, 1});
    CHECK_THROWS_AS(map_addr(4, d), ConfigError);
    CHECK_THROWS_AS(map_addr(d.total_bytes, d), ConfigError);
}

TEST_CASE("same-bank requests conflict, different banks do not") {
    Tcdm t(TcdmConfig::fc32(), ArbitrationPolicy::RoundRobin);
    std::vector<MemRequest> reqs = {core_read(0, 0, 0), core_read(1, 0, 32 * 8), core_read(2, 0, 8)};
    auto res = t.arbitrate(0, reqs);
    CHECK(res.conflicts == 1);
    CHECK(res.granted[2]);
    CHECK(res.granted[0] != res.granted[1]);
    CHECK(t.total_conflicts() == 1);
    CHECK(t.conflicts_per_bank()[0] == 1);
}

TEST_CASE("round-robin alternates between two contenders") {
    Tcdm t(TcdmConfig::fc32(), ArbitrationPolicy::RoundRobin);
    std::vector<MemRequest> reqs = {core_read(0, 0, 0), core_read(5, 1, 0)};
    std::vector<int> winners;
    for (int c = 0; c < 4; ++c) {
        auto res = t.arbitrate(c, reqs);
        winners.push_back(res.granted[0] ? 0 : 1);
    }
    CHECK(winners == std::vector<int>{0, 1, 0, 1});
}

TEST_CASE("DMA beat takes all banks of its superbank or none") {
    for (auto policy : {ArbitrationPolicy::RoundRobin, ArbitrationPolicy::DmaPriority, ArbitrationPolicy::CorePriority}) {
        Tcdm t(TcdmConfig::fc32(), policy);
        CAPTURE(to_string(policy));
        // core hits bank 3, DMA beat covers banks 0..7; core on bank 9 is untouched
        std::vector<MemRequest> reqs = {core_read(0, 0, 3 * 8), dma_beat(0), core_read(1, 0, 9 * 8)};
        for (int c = 0; c < 4; ++c) {
            auto res = t.arbitrate(c, reqs);
            CHECK(res.granted[0] != res.granted[1]);
            CHECK(res.granted[2]);
            CHECK(res.conflicts == 1);
            if (policy == ArbitrationPolicy::DmaPriority) CHECK(res.granted[1]);
            if (policy == ArbitrationPolicy::CorePriority) CHECK(res.granted[0]);
        }
    }
    Tcdm t(TcdmConfig::fc32(), ArbitrationPolicy::RoundRobin);
    std::vector<MemRequest> uncontested = {dma_beat(64), core_read(0, 0, 0)};
    CHECK(t.arbitrate(0, uncontested).conflicts == 0);
    std::vector<MemRequest> misaligned = {dma_beat(8)};
    CHECK_THROWS_AS(t.arbitrate(0, misaligned), ConfigError);
}

TEST_CASE("hyperbanks are independent") {
    Tcdm t(TcdmConfig::dobu64(), ArbitrationPolicy::RoundRobin);
    const std::uint64_t hb1 = 64 * 1024;
    std::vector<MemRequest> reqs;
    for (std::uint16_t c = 0; c < 8; ++c) {
        for (std::uint8_t p = 0; p < 3; ++p) reqs.push_back(core_read(c, p, 8 * (c * 3 + p)));
    }
    reqs.push_back(dma_beat(hb1 + 64));
    auto res = t.arbitrate(0, reqs);
    CHECK(res.conflicts == 0);
}

TEST_CASE("granted writes update contents in functional mode") {
    Tcdm t(TcdmConfig::fc32(), ArbitrationPolicy::RoundRobin, true);
    auto w = core_read(0, 2, 16);
    w.is_write = true;
    w.wdata = 4.25;
    std::vector<MemRequest> reqs = {w};
    t.arbitrate(0, reqs);
    CHECK(t.read_word(16) == 4.25);
}

TEST_CASE("DMA engine moves data beat by beat") {
    Tcdm t(TcdmConfig::fc32(), ArbitrationPolicy::RoundRobin, true);
    std::vector<double> l2(32);
    for (std::size_t i = 0; i < l2.size(); ++i) l2[i] = static_cast<double>(i);
    DmaEngine dma(t, &l2);
    DmaDescriptor d;
    d.tcdm_addr = 256;
    d.beat_stride = 256;
    d.beats = 2;
    for (std::int64_t i = 0; i < 16; ++i) d.l2_index.push_back(i < 8 ? i : -1);
    d.id = 7;
    dma.dma_transfer(d);
    std::uint64_t c = 0;
    for (; dma.busy(); ++c) {
        auto r = dma.gen_request(c);
        REQUIRE(r);
        auto res = t.arbitrate(c, std::span<const MemRequest>(&*r, 1));
        REQUIRE(res.granted[0]);
        dma.on_grant(*r, c);
    }
    CHECK(c == 2);
    CHECK(dma.beats_done() == 2);
    CHECK(t.read_word(256 + 7 * 8) == 7.0);
    REQUIRE(dma.completions().size() == 1);
    CHECK(dma.completions()[0].id == 7);

    DmaDescriptor bad;
    bad.tcdm_addr = 8;
    bad.beats = 1;
    bad.l2_index.assign(8, 0);
    CHECK_THROWS_AS(dma.dma_transfer(bad), ConfigError);
    bad.tcdm_addr = 0;
    bad.beat_stride = 72;
    bad.beats = 2;
    bad.l2_index.assign(16, 0);
    CHECK_THROWS_AS(dma.dma_transfer(bad), ConfigError);
}

}
