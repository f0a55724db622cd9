#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "tcm/traffic_model.hpp"

using namespace tcm;

namespace {

struct StreamStats
{
    double mean_payload = 0;
    double stdev_payload = 0;
    double pps = 0;
    double ack_fraction = 0;
};

StreamStats stats_of(const std::vector<NativePacket>& s)
{
    StreamStats st;
    double sum = 0, sum_sq = 0;
    std::size_t acks = 0;
    for (const auto& p : s) {
        sum += p.payload_len;
        sum_sq += double(p.payload_len) * p.payload_len;
        acks += p.is_pure_ack();
    }
    const double n = double(s.size());
    st.mean_payload = sum / n;
    st.stdev_payload = std::sqrt(sum_sq / n - st.mean_payload * st.mean_payload);
    st.ack_fraction = double(acks) / n;
    st.pps = n / (double(s.back().arrival_us) / 1e6);
    return st;
}

void check_flow_invariants(const std::vector<NativePacket>& s)
{
    for (std::size_t i = 1; i < s.size(); ++i) {
        REQUIRE(s[i].arrival_us >= s[i - 1].arrival_us);
        REQUIRE(s[i].seq == s[i - 1].seq + s[i - 1].payload_len);
        REQUIRE(std::uint16_t(s[i].ipid - s[i - 1].ipid) >= 1);
    }
    for (const auto& p : s) {
        REQUIRE(p.wire_size() == p.payload_len + 40);
        if (p.is_pure_ack()) REQUIRE_FALSE(p.push);
    }
}

} // namespace

TEST_CASE("fragment_apdu splits at the MSS")
{
    CHECK(fragment_apdu(3000, 1460) == std::vector<std::uint32_t>{1460, 1460, 80});
    CHECK(fragment_apdu(100, 1460) == std::vector<std::uint32_t>{100});
    CHECK(fragment_apdu(2920, 1460) == std::vector<std::uint32_t>{1460, 1460});
    CHECK_THROWS_AS(fragment_apdu(0, 1460), std::invalid_argument);
    CHECK_THROWS_AS(fragment_apdu(10, 0), std::invalid_argument);
}

TEST_CASE("fragment_apdu conserves bytes")
{
    for (std::uint32_t mss : {1u, 7u, 536u, 1460u})
        for (std::uint32_t len = 1; len < 5000; len += 37) {
            const auto parts = fragment_apdu(len, mss);
            CHECK(parts.size() == (len + mss - 1) / mss);
            CHECK(std::accumulate(parts.begin(), parts.end(), 0u) == len);
            for (std::size_t i = 0; i + 1 < parts.size(); ++i) CHECK(parts[i] == mss);
        }
}

TEST_CASE("builtin profiles validate")
{
    for (const auto& g : builtin_profiles()) CHECK_NOTHROW(validate(g));
}

TEST_CASE("invalid profiles are rejected with a diagnostic")
{
    auto g = wow_profile();
    g.c2s.packet_rate = 0;
    CHECK_THROWS_WITH_AS(validate(g), doctest::Contains("packet_rate"), ProfileError);

    g = wow_profile();
    std::get<DiscreteSizes>(g.c2s.apdu_sizes).entries[0].second = 0.5;
    CHECK_THROWS_WITH_AS(validate(g), doctest::Contains("sum to 1"), ProfileError);

    g = wow_profile();
    g.s2c.ack_ratio = 1.5;
    CHECK_THROWS_AS(validate(g), ProfileError);

    g = wow_profile();
    g.fields.c2s.window.full = 0.5;
    CHECK_THROWS_AS(validate(g), ProfileError);

    g = wow_profile();
    g.s2c.interpacket[1].weight = 0.0;
    CHECK_THROWS_AS(generate_player_stream(g, Direction::ServerToClient, 10, 1), ProfileError);
}

TEST_CASE("single packet stream")
{
    const auto g = wow_profile();
    const auto s = generate_player_stream(g, Direction::ClientToServer, 1, 99);
    REQUIRE(s.size() == 1);
    CHECK(s[0].arrival_us > 0);
    CHECK(s[0].flow_id == 0);
    // the first inter-arrival of either process is at most the largest mixture bound
    const double upper = std::max(g.c2s.interpacket.back().hi_s,
                                  g.c2s.interpacket.back().hi_s / (g.c2s.ack_ratio * g.c2s.packet_rate) /
                                      mixture_mean(g.c2s.interpacket));
    CHECK(double(s[0].arrival_us) <= upper * 1e6 + 1);
    CHECK_THROWS_AS(generate_player_stream(g, Direction::ClientToServer, 0, 99), std::invalid_argument);
}

TEST_CASE("generation is deterministic and seed sensitive")
{
    const auto g = wow_profile();
    const auto a = generate_player_stream(g, Direction::ServerToClient, 3000, 5);
    const auto b = generate_player_stream(g, Direction::ServerToClient, 3000, 5);
    const auto c = generate_player_stream(g, Direction::ServerToClient, 3000, 6);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("per-flow header invariants hold")
{
    for (const auto& g : builtin_profiles())
        for (const Direction dir : kDirections) check_flow_invariants(generate_player_stream(g, dir, 20000, 11));
}

TEST_CASE("downlink APDUs above the MSS become back-to-back bursts")
{
    const auto g = wow_profile();
    const auto s = generate_player_stream(g, Direction::ServerToClient, 20000, 3);
    std::size_t bursts = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i - 1].payload_len == g.mss && !s[i - 1].push && s[i].payload_len > 0) {
            CHECK(s[i].arrival_us - s[i - 1].arrival_us == kBurstSpacingUs);
            ++bursts;
        }
    }
    CHECK(bursts > 100);
    for (const auto& p : s) CHECK(p.payload_len <= g.mss);
}

TEST_CASE("WoW pure-ACK fractions over 10,000 packets")
{
    const auto g = wow_profile();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto up = stats_of(generate_player_stream(g, Direction::ClientToServer, 10000, seed));
        const auto down = stats_of(generate_player_stream(g, Direction::ServerToClient, 10000, seed));
        CHECK(std::abs(up.ack_fraction - 0.56) <= 0.02);
        CHECK(std::abs(down.ack_fraction - 0.28) <= 0.02);
    }
}

TEST_CASE("WoW uplink calibration over 200,000 packets")
{
    const auto s = stats_of(generate_player_stream(wow_profile(), Direction::ClientToServer, 200000, 42));
    CHECK(std::abs(s.mean_payload - 8.74) <= 0.3);
    CHECK(std::abs(s.pps - 9.51) <= 0.3);
}

TEST_CASE("statistical calibration of every profile and direction")
{
    for (const auto& g : builtin_profiles())
        for (const Direction dir : kDirections) {
            CAPTURE(g.name);
            CAPTURE(to_string(dir));
            const auto& dp = g.at(dir);
            const auto s = stats_of(generate_player_stream(g, dir, 100000, 2024));
            const double se = s.stdev_payload / std::sqrt(100000.0);
            CHECK(std::abs(s.mean_payload - dp.expected_payload) <= std::max(3 * se, 1e-9));
            CHECK(std::abs(s.pps - dp.packet_rate) / dp.packet_rate <= 0.05);
            CHECK(std::abs(s.ack_fraction - dp.ack_ratio) <= 0.01);
        }
}

TEST_CASE("scenario merge")
{
    const auto g = wow_profile();
    const auto merged = generate_scenario(g, Direction::ClientToServer, 10, 5000, 77);
    REQUIRE(merged.size() == 50000);

    std::set<std::uint32_t> flows;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        flows.insert(merged[i].flow_id);
        if (i > 0) {
            REQUIRE(merged[i - 1].arrival_us <= merged[i].arrival_us);
            if (merged[i - 1].arrival_us == merged[i].arrival_us) REQUIRE(merged[i - 1].flow_id <= merged[i].flow_id);
        }
    }
    CHECK(flows.size() == 10);

    // each flow's subsequence equals its standalone generation
    for (std::uint32_t f = 0; f < 10; ++f) {
        std::vector<NativePacket> sub;
        std::copy_if(merged.begin(), merged.end(), std::back_inserter(sub), [f](const auto& p) { return p.flow_id == f; });
        CHECK(sub == generate_player_stream(g, Direction::ClientToServer, 5000, player_seed(77, f), f));
    }

    CHECK(generate_scenario(g, Direction::ClientToServer, 1, 5000, 9) ==
          generate_player_stream(g, Direction::ClientToServer, 5000, 9));
    CHECK_THROWS_AS(generate_scenario(g, Direction::ClientToServer, 0, 10, 9), std::invalid_argument);
}

TEST_CASE("100-player aggregate rate")
{
    const auto merged = generate_scenario(wow_profile(), Direction::ClientToServer, 100, 5000, 5);
    // rate over the interval in which every player is still sending
    std::vector<TimeUs> last(100, 0);
    for (const auto& p : merged) last[p.flow_id] = p.arrival_us;
    const TimeUs end = *std::min_element(last.begin(), last.end());
    const auto count = std::count_if(merged.begin(), merged.end(), [end](const auto& p) { return p.arrival_us <= end; });
    const double pps = double(count) / (double(end) / 1e6);
    CHECK(std::abs(pps - 951.0) / 951.0 <= 0.05);
}
