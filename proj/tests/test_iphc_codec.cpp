#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "tcm/iphc_codec.hpp"
#include "tcm/traffic_model.hpp"

using namespace tcm;

namespace {

NativePacket base_packet()
{
    NativePacket p;
    p.flow_id = 3;
    p.direction = Direction::ClientToServer;
    p.payload_len = 12;
    p.push = true;
    p.seq = 5000;
    p.ack = 9000;
    p.window = 16000;
    p.ipid = 100;
    return p;
}

std::string hex(std::span<const std::uint8_t> bytes)
{
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (auto b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 15];
    }
    return s;
}

std::vector<std::uint8_t> unhex(const std::string& s)
{
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i < s.size(); i += 2) out.push_back(std::uint8_t(std::stoi(s.substr(i, 2), nullptr, 16)));
    return out;
}

} // namespace

TEST_CASE("first packet of a flow is a 40-byte full header carrying the CID")
{
    CompressionContext ctx;
    ctx.cid = 17;
    const auto rec = encode(base_packet(), ctx);
    CHECK(rec.kind() == RecordKind::FullHeader);
    CHECK(rec.header_len() == 40);
    CHECK(rec.header()[3] == 17);
    CHECK(rec.cid() == 17);
    CHECK(rec.payload_len() == 12);
    CHECK(ctx.established);
}

TEST_CASE("compressed header sizes for the documented delta cases")
{
    CompressionContext ctx;
    auto p = base_packet();
    encode(p, ctx);

    SUBCASE("dseq=12, dipid=1, push")
    {
        p.seq += 12;
        p.ipid += 1;
        const auto rec = encode(p, ctx);
        CHECK(rec.kind() == RecordKind::CompressedTcp);
        CHECK(rec.header_len() == 6);
        CHECK(rec.mask() == (mask_bits::S | mask_bits::I | mask_bits::P));
    }
    SUBCASE("dack=70000 takes the escape path")
    {
        p.ack += 70000;
        p.ipid += 1;
        const auto rec = encode(p, ctx);
        CHECK(rec.mask() == (mask_bits::A | mask_bits::I | mask_bits::P));
        const auto f = rec.field_bytes();
        REQUIRE(f.size() == 6);
        CHECK(f[0] == kEscape);
        CHECK(((f[1] << 24) | (f[2] << 16) | (f[3] << 8) | f[4]) == p.ack);
    }
    SUBCASE("dwin=-50 is one signed byte")
    {
        p.window -= 50;
        p.ipid += 1;
        const auto rec = encode(p, ctx);
        CHECK(rec.header_len() == 6);
        CHECK(rec.mask() == (mask_bits::W | mask_bits::I | mask_bits::P));
        CHECK(rec.field_bytes()[0] == 0xCE);
    }
    SUBCASE("window deltas at the one-byte limits")
    {
        p.window += 127;
        CHECK(encode(p, ctx).header_len() == 5);
        p.window -= 128;
        CHECK(encode(p, ctx).header_len() == 5);
        p.window += 128;
        CHECK(encode(p, ctx).header_len() == 7);
        p.window -= 129;
        CHECK(encode(p, ctx).header_len() == 7);
    }
    SUBCASE("nothing changed")
    {
        p.push = false;
        const auto rec = encode(p, ctx);
        CHECK(rec.header_len() == 4);
        CHECK(rec.mask() == 0);
    }
}

TEST_CASE("decode restores the unchanged ipid when the I bit is clear")
{
    CompressionContext enc, dec;
    auto p = base_packet();
    decode(encode(p, enc), dec);
    p.seq += 12;
    const auto rec = encode(p, enc);
    CHECK((rec.mask() & mask_bits::I) == 0);
    const auto out = decode(rec, dec);
    CHECK(out.ipid == 100);
    CHECK(same_header(out, p));
    CHECK(enc == dec);
}

TEST_CASE("decoder errors")
{
    CompressionContext enc;
    auto p = base_packet();
    encode(p, enc);
    p.ipid += 1;
    const auto rec = encode(p, enc);

    SUBCASE("unseen CID")
    {
        Decompressor d;
        CHECK_THROWS_AS(d.decompress(rec), ContextMissError);
        CompressionContext fresh;
        CHECK_THROWS_AS(decode(rec, fresh), ContextMissError);
    }
    SUBCASE("mask announces more bytes than present")
    {
        std::vector<std::uint8_t> raw(rec.header().begin(), rec.header().end());
        raw[1] |= mask_bits::S;
        CompressionContext dec;
        CompressionContext e2;
        decode(encode(base_packet(), e2), dec);
        CHECK_THROWS_AS(decode(parse_record(RecordKind::CompressedTcp, raw, 12), dec), FramingError);
    }
    SUBCASE("trailing bytes not covered by the mask")
    {
        std::vector<std::uint8_t> raw(rec.header().begin(), rec.header().end());
        raw.push_back(7);
        CompressionContext dec, e2;
        decode(encode(base_packet(), e2), dec);
        CHECK_THROWS_AS(decode(parse_record(RecordKind::CompressedTcp, raw, 12), dec), FramingError);
    }
    SUBCASE("reserved and urgent bits")
    {
        for (std::uint8_t bit : {std::uint8_t(0x80), std::uint8_t(0x40), mask_bits::U}) {
            std::vector<std::uint8_t> raw(rec.header().begin(), rec.header().end());
            raw[1] |= bit;
            CompressionContext dec, e2;
            decode(encode(base_packet(), e2), dec);
            CHECK_THROWS_AS(decode(parse_record(RecordKind::CompressedTcp, raw, 12), dec), FramingError);
        }
    }
    SUBCASE("corrupted checksum")
    {
        std::vector<std::uint8_t> raw(rec.header().begin(), rec.header().end());
        raw[2] ^= 0x40;
        CompressionContext dec, e2;
        decode(encode(base_packet(), e2), dec);
        CHECK_THROWS_AS(decode(parse_record(RecordKind::CompressedTcp, raw, 12), dec), FramingError);
    }
    SUBCASE("bad header lengths")
    {
        const std::vector<std::uint8_t> short_hdr = {1, 2, 3};
        CHECK_THROWS_AS(parse_record(RecordKind::CompressedTcp, short_hdr, 0), FramingError);
        CHECK_THROWS_AS(parse_record(RecordKind::FullHeader, short_hdr, 0), FramingError);
    }
}

TEST_CASE("golden wire bytes")
{
    std::ifstream in(TCM_FIXTURE_DIR "/golden_records.json");
    REQUIRE(in);
    const auto doc = nlohmann::json::parse(in);
    std::size_t checked = 0;
    for (const auto& flow : doc) {
        CAPTURE(flow["name"].get<std::string>());
        CompressionContext enc;
        enc.cid = flow["cid"].get<std::uint8_t>();
        CompressionContext dec;
        for (const auto& r : flow["records"]) {
            const auto& jp = r["packet"];
            NativePacket p;
            p.flow_id = jp["flow"];
            p.direction = jp["c2s"].get<bool>() ? Direction::ClientToServer : Direction::ServerToClient;
            p.payload_len = jp["payload"];
            p.push = jp["push"];
            p.seq = jp["seq"];
            p.ack = jp["ack"];
            p.window = jp["window"];
            p.ipid = jp["ipid"];
            const auto rec = encode(p, enc);
            CHECK(hex(rec.header()) == r["hex"].get<std::string>());
            CHECK((rec.kind() == RecordKind::FullHeader) == (r["kind"] == "full"));

            const auto raw = unhex(r["hex"]);
            const auto parsed = parse_record(rec.kind(), raw, p.payload_len);
            CHECK(same_header(decode(parsed, dec), p));
            CHECK(enc == dec);
            ++checked;
        }
    }
    CHECK(checked == 11);
}

TEST_CASE("periodic full-header refresh")
{
    CompressionContext enc;
    enc.refresh_interval = 3;
    CompressionContext dec;
    dec.refresh_interval = 3;
    auto p = base_packet();
    std::vector<RecordKind> kinds;
    for (int i = 0; i < 9; ++i) {
        const auto rec = encode(p, enc);
        kinds.push_back(rec.kind());
        CHECK(same_header(decode(rec, dec), p));
        CHECK(enc.digest() == dec.digest());
        p.ipid += 1;
        p.seq += p.payload_len;
    }
    const auto F = RecordKind::FullHeader, C = RecordKind::CompressedTcp;
    CHECK(kinds == std::vector<RecordKind>{F, C, C, C, F, C, C, C, F});
}

TEST_CASE("CID allocator admits at most 256 flows per endpoint")
{
    Compressor c;
    auto p = base_packet();
    for (std::uint32_t f = 0; f < 256; ++f) {
        p.flow_id = f;
        c.compress(p);
    }
    CHECK(c.active_flows() == 256);
    p.flow_id = 256;
    CHECK_THROWS_AS(c.compress(p), AdmissionError);
    c.release(17, Direction::ClientToServer);
    CHECK_NOTHROW(c.compress(p));
    CHECK(c.context(256, Direction::ClientToServer)->cid == 17);
}

TEST_CASE("randomized round trip with context synchronization")
{
    Rng rng(1234);
    Compressor comp;
    Decompressor decomp;
    std::vector<NativePacket> state(8);
    for (std::uint32_t f = 0; f < state.size(); ++f) {
        state[f].flow_id = f;
        state[f].direction = f % 2 ? Direction::ServerToClient : Direction::ClientToServer;
        state[f].seq = std::uint32_t(rng.next());
        state[f].ack = std::uint32_t(rng.next());
        state[f].window = std::uint16_t(rng.next());
        state[f].ipid = std::uint16_t(rng.next());
    }
    for (int i = 0; i < 50000; ++i) {
        auto& p = state[rng.uniform_int(0, state.size() - 1)];
        p.seq += p.payload_len;
        p.payload_len = std::uint32_t(rng.uniform_int(0, 3)) == 0 ? 0 : std::uint32_t(rng.uniform_int(1, 1460));
        p.push = p.payload_len > 0 && rng.uniform01() < 0.7;
        p.ack += std::uint32_t(rng.uniform01() < 0.5 ? 0 : rng.uniform_int(1, 300));
        p.window = std::uint16_t(p.window + (rng.uniform01() < 0.5 ? 0 : rng.uniform_int(0, 65535)));
        p.ipid = std::uint16_t(p.ipid + rng.uniform_int(0, 400));
        const auto rec = comp.compress(p);
        CHECK(rec.header_len() <= (rec.kind() == RecordKind::FullHeader ? 40u : 20u));
        const auto out = decomp.decompress(rec);
        REQUIRE(same_header(out, p));
        REQUIRE(comp.context(p.flow_id, p.direction)->digest() == decomp.context(rec.cid())->digest());
    }
}

TEST_CASE("serial and parallel stream compression agree")
{
    const auto pkts = generate_scenario(wow_profile(), Direction::ServerToClient, 20, 2000, 8);
    Compressor a, b;
    CHECK(compress_stream(pkts, a) == compress_stream_serial(pkts, b));
}

TEST_CASE("expected reduced header")
{
    const auto m = wow_field_model();
    SUBCASE("matches brute-force enumeration")
    {
        for (const Direction dir : kDirections)
            CHECK(expected_reduced_header(m, dir) == doctest::Approx(oracle::enumerate_expected_header(m.at(dir))).epsilon(1e-12));
    }
    SUBCASE("built-in client-to-server statistics give 8.72 bytes")
    {
        CHECK(std::abs(expected_reduced_header(m, Direction::ClientToServer) - 8.72) <= 0.01);
    }
    SUBCASE("all fields static leaves the fixed part and the ipid byte")
    {
        CHECK(expected_reduced_header(static_field_model(), Direction::ClientToServer) == 5.0);
        CHECK(expected_reduced_header(static_field_model(), Direction::ServerToClient) == 5.0);
    }
    SUBCASE("invalid model")
    {
        auto bad = m;
        bad.s2c.ack.one_byte = 0.9;
        CHECK_THROWS_AS(expected_reduced_header(bad, Direction::ServerToClient), std::invalid_argument);
    }
}

TEST_CASE("sampled header sizes")
{
    const auto m = wow_field_model();
    for (const Direction dir : kDirections) {
        const auto sizes = sample_header_sizes(m, dir, 100000, 5);
        double mean = 0;
        for (auto s : sizes) {
            CHECK(s >= 5);
            CHECK(s <= (dir == Direction::ClientToServer ? 14u : 11u));
            mean += s;
        }
        mean /= double(sizes.size());
        CHECK(std::abs(mean - expected_reduced_header(m, dir)) <= 0.05);
    }
    for (auto s : sample_header_sizes(static_field_model(), Direction::ClientToServer, 1000, 1)) CHECK(s == 5);
}

TEST_CASE("bit-level encoding of generated flows tracks the field model")
{
    const auto g = wow_profile();
    for (const Direction dir : kDirections) {
        const auto pkts = generate_scenario(g, dir, 20, 5000, 31);
        Compressor c;
        double total = 0;
        std::size_t n = 0;
        std::size_t max_len = 0;
        for (const auto& r : compress_stream(pkts, c))
            if (r.kind() == RecordKind::CompressedTcp) {
                total += double(r.header_len());
                max_len = std::max(max_len, r.header_len());
                ++n;
            }
        CHECK(std::abs(total / double(n) - expected_reduced_header(g.fields, dir)) <= 0.1);
        CHECK(max_len <= (dir == Direction::ClientToServer ? 14u : 11u));
    }
}
