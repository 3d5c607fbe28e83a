#include "doctest.h"

#include "clustersim/error.hpp"
#include "clustersim/isa.hpp"

using namespace clustersim;

namespace {

Instruction cls(const std::string& line) { return classify(parse_asm(line)); }

StreamConfig read_pattern() { return StreamConfig{0, {{8, 8}, {4, 64}}, StreamDir::Read}; }

}  // namespace

TEST_SUITE("isa") {

TEST_CASE("parse_asm splits mnemonic and operands") {
    auto raw = parse_asm("  fmadd ft2, ft0 ,ft1, c3   # tail comment");
    CHECK(raw.mnemonic == "fmadd");
    REQUIRE(raw.operands.size() == 4);
    CHECK(raw.operands[1] == "ft0");
    CHECK(raw.operands[3] == "c3");
    CHECK(parse_asm("barrier").operands.empty());
}

TEST_CASE("compute instructions") {
    auto mul = cls("fmul c5, ft0, ft1");
    CHECK(mul.kind == InstKind::FpCompute);
    CHECK(mul.reads(StreamId::S0));
    CHECK(mul.reads(StreamId::S1));
    CHECK_FALSE(mul.reads(StreamId::S2));
    CHECK(mul.dst_reg == std::optional<std::uint8_t>(5));
    CHECK_FALSE(mul.acc_reg.has_value());
    CHECK_FALSE(mul.uses_int_rf);

    auto mac = cls("fmadd c2, ft0, ft1, c2");
    CHECK(mac.kind == InstKind::FpCompute);
    CHECK(mac.acc_reg == std::optional<std::uint8_t>(2));

    auto wb = cls("fmadd ft2, ft0, ft1, c7");
    CHECK(wb.writes_stream == std::optional<StreamId>(StreamId::S2));
    CHECK_FALSE(wb.dst_reg.has_value());
    CHECK(wb.stream_read_count() == 2);
}

TEST_CASE("control and integer instructions") {
    auto f = cls("frep 31, 8");
    CHECK(f.kind == InstKind::FrepCfg);
    REQUIRE(f.frep_payload);
    CHECK(f.frep_payload->max_rpt == 31);
    CHECK(f.frep_payload->max_inst == 8);

    CHECK(cls("addi t0, t0, 1").kind == InstKind::IntLoopMgmt);
    auto b = cls("bne t0, t1, 1b");
    CHECK(b.kind == InstKind::IntLoopMgmt);
    CHECK(b.taken_branch);
    CHECK_FALSE(cls("bne t0, t1, 1f").taken_branch);

    auto mv = cls("fmv.x.d a0, c1");
    CHECK(mv.kind == InstKind::Other);
    CHECK(mv.uses_int_rf);
    CHECK(cls("nop").kind == InstKind::Other);
    CHECK(cls("barrier").uses_int_rf);

    RawInst cfg{"scfgw", {"ft1"}, read_pattern()};
    auto s = classify(cfg);
    CHECK(s.kind == InstKind::SsrCfg);
    CHECK(s.uses_int_rf);
    CHECK(s.ssr_target == std::optional<StreamId>(StreamId::S1));
}

TEST_CASE("malformed descriptors are rejected") {
    CHECK_THROWS_AS(cls("fdiv c0, ft0, ft1"), ConfigError);
    CHECK_THROWS_AS(cls("fmadd c0, ft0, ft1"), ConfigError);
    CHECK_THROWS_AS(cls("fmul c0, ft1, ft0"), ConfigError);
    CHECK_THROWS_AS(cls("fmul ft0, ft0, ft1"), ConfigError);
    CHECK_THROWS_AS(cls("fmadd c0, ft0, ft1, ft2"), ConfigError);
    CHECK_THROWS_AS(cls("fmul c16, ft0, ft1"), ConfigError);
    CHECK_THROWS_AS(cls("frep 0, 4"), ConfigError);
    CHECK_THROWS_AS(cls("frep 4, 0"), ConfigError);
    CHECK_THROWS_AS(cls("frep 4"), ConfigError);
    CHECK_THROWS_AS(cls("bne t0, t1, loop"), ConfigError);
    CHECK_THROWS_AS(classify(RawInst{"scfgw", {"ft0"}, std::nullopt}), ConfigError);
    // write pattern on a read register
    auto w = read_pattern();
    w.direction = StreamDir::Write;
    CHECK_THROWS_AS(classify(RawInst{"scfgw", {"ft0"}, w}), ConfigError);
}

TEST_CASE("stream config validation") {
    CHECK(read_pattern().element_count() == 32);
    CHECK_NOTHROW(read_pattern().validate());
    CHECK_THROWS_AS((StreamConfig{4, {{1, 8}}}.validate()), ConfigError);
    CHECK_THROWS_AS((StreamConfig{0, {{1, 12}}}.validate()), ConfigError);
    CHECK_THROWS_AS((StreamConfig{0, {{0, 8}}}.validate()), ConfigError);
    CHECK_THROWS_AS((StreamConfig{0, {}}.validate()), ConfigError);
    CHECK_THROWS_AS((StreamConfig{0, {{1, 8}, {1, 8}, {1, 8}, {1, 8}, {1, 8}}}.validate()), ConfigError);
}

TEST_CASE("classify(to_raw(x)) round-trips every builder") {
    std::vector<Instruction> all = {
        make::fmul(3),  make::fmadd(4),        make::fmadd_wb(5), make::frep(7, 24),
        make::addi(),   make::bne(true),       make::bne(false),  make::barrier(),
        make::fmv_x_d(2), make::nop(),
        make::ssr_cfg(StreamId::S2, StreamConfig{64, {{8, 8}}, StreamDir::Write}),
    };
    for (const auto& inst : all) {
        CAPTURE(to_asm(inst));
        CHECK(classify(to_raw(inst)) == inst);
        if (inst.kind != InstKind::SsrCfg) {
            CHECK(classify(parse_asm(to_asm(inst))) == inst);
        }
    }
    CHECK(to_asm(make::fmadd_wb(1)) == "fmadd ft2, ft0, ft1, c1");
    CHECK(to_asm(make::frep(7, 24)) == "frep 7, 24");
}

}
