#include "tcm/traffic_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tcm/rng.hpp"

namespace tcm {

namespace {

[[noreturn]] void fail(const GameProfile& profile, const std::string& what)
{
    throw ProfileError("profile '" + profile.name + "': " + what);
}

void validate_direction(const GameProfile& profile, const DirectionProfile& dp, Direction dir)
{
    const std::string tag = std::string(to_string(dir)) + ": ";
    if (!(dp.packet_rate > 0.0)) fail(profile, tag + "packet_rate must be positive");
    if (!(dp.expected_payload >= 0.0)) fail(profile, tag + "expected_payload must be non-negative");
    if (!(dp.ack_ratio >= 0.0 && dp.ack_ratio <= 1.0)) fail(profile, tag + "ack_ratio outside [0,1]");

    if (const auto* table = std::get_if<DiscreteSizes>(&dp.apdu_sizes)) {
        if (table->entries.empty()) fail(profile, tag + "empty APDU size table");
        double total = 0.0;
        for (const auto& [bytes, prob] : table->entries) {
            if (bytes == 0) fail(profile, tag + "APDU sizes must be positive");
            if (prob < 0.0) fail(profile, tag + "negative APDU size probability");
            total += prob;
        }
        if (std::abs(total - 1.0) > 1e-9) fail(profile, tag + "APDU size probabilities do not sum to 1");
    } else {
        const auto& w = std::get<WeibullSizes>(dp.apdu_sizes);
        if (!(w.shape > 0.0 && w.scale > 0.0)) fail(profile, tag + "Weibull shape and scale must be positive");
    }

    if (dp.interpacket.empty()) fail(profile, tag + "empty inter-packet mixture");
    double total = 0.0;
    for (const auto& c : dp.interpacket) {
        if (!(c.lo_s >= 0.0 && c.hi_s >= c.lo_s)) fail(profile, tag + "inter-packet interval needs 0 <= lo <= hi");
        if (c.weight < 0.0) fail(profile, tag + "negative inter-packet weight");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(profile, tag + "inter-packet weights do not sum to 1");
    if (!(mixture_mean(dp.interpacket) > 0.0)) fail(profile, tag + "inter-packet mean must be positive");
}

double sample_mixture(const std::vector<UniformComponent>& mixture, Rng& rng)
{
    double u = rng.uniform01();
    for (const auto& c : mixture) {
        if (u < c.weight) return rng.uniform(c.lo_s, c.hi_s);
        u -= c.weight;
    }
    const auto& last = mixture.back();
    return rng.uniform(last.lo_s, last.hi_s);
}

std::uint32_t sample_apdu(const ApduSizeDist& dist, Rng& rng)
{
    if (const auto* table = std::get_if<DiscreteSizes>(&dist)) {
        double u = rng.uniform01();
        for (const auto& [bytes, prob] : table->entries) {
            if (u < prob) return bytes;
            u -= prob;
        }
        return table->entries.back().first;
    }
    const auto& w = std::get<WeibullSizes>(dist);
    const double u = rng.uniform01();
    const double x = w.scale * std::pow(-std::log1p(-u), 1.0 / w.shape);
    const double rounded = std::round(x);
    if (rounded < 1.0) return 1;
    if (rounded > 1e9) return 1000000000u;
    return static_cast<std::uint32_t>(rounded);
}

enum class Change { None, OneByte, Full };

Change sample_change(const FieldChangeProbs& p, Rng& rng)
{
    const double u = rng.uniform01();
    if (u < p.no_change) return Change::None;
    if (u < p.no_change + p.one_byte) return Change::OneByte;
    return Change::Full;
}

std::uint16_t next_window(std::uint16_t window, const FieldChangeProbs& p, Rng& rng)
{
    switch (sample_change(p, rng)) {
    case Change::None:
        return window;
    case Change::OneByte: {
        // signed delta in [-128, 127] \ {0}
        const auto v = static_cast<int>(rng.uniform_int(0, 254));
        const int delta = v < 128 ? v - 128 : v - 127;
        return static_cast<std::uint16_t>(window + delta);
    }
    case Change::Full:
        // modular delta whose signed value falls outside [-128, 127]
        return static_cast<std::uint16_t>(window + rng.uniform_int(128, 65407));
    }
    return window;
}

std::uint32_t next_ack(std::uint32_t ack, const FieldChangeProbs& p, Rng& rng)
{
    switch (sample_change(p, rng)) {
    case Change::None:
        return ack;
    case Change::OneByte:
        return ack + static_cast<std::uint32_t>(rng.uniform_int(1, 255));
    case Change::Full:
        return ack + static_cast<std::uint32_t>(rng.uniform_int(256, 65535));
    }
    return ack;
}

struct PendingSegment
{
    TimeUs at_us;
    std::uint32_t len;
    bool last;
};

std::vector<NativePacket> merge_streams(std::vector<std::vector<NativePacket>>& streams)
{
    std::size_t total = 0;
    for (const auto& s : streams) total += s.size();
    std::vector<NativePacket> merged;
    merged.reserve(total);
    for (auto& s : streams) merged.insert(merged.end(), s.begin(), s.end());
    std::stable_sort(merged.begin(), merged.end(), [](const NativePacket& a, const NativePacket& b) {
        if (a.arrival_us != b.arrival_us) return a.arrival_us < b.arrival_us;
        return a.flow_id < b.flow_id;
    });
    return merged;
}

} // namespace

void validate(const GameProfile& profile)
{
    if (profile.name.empty()) throw ProfileError("profile without a name");
    if (profile.mss == 0) fail(profile, "mss must be positive");
    if (profile.mtu < profile.mss + kNativeHeaderBytes) fail(profile, "mtu must hold mss plus 40 header bytes");
    validate_direction(profile, profile.c2s, Direction::ClientToServer);
    validate_direction(profile, profile.s2c, Direction::ServerToClient);
    try {
        validate(profile.fields);
    } catch (const std::invalid_argument& e) {
        fail(profile, e.what());
    }
}

double mixture_mean(const std::vector<UniformComponent>& mixture) noexcept
{
    double mean = 0.0;
    for (const auto& c : mixture) mean += c.weight * 0.5 * (c.lo_s + c.hi_s);
    return mean;
}

std::vector<std::uint32_t> fragment_apdu(std::uint32_t apdu_len, std::uint32_t mss)
{
    if (apdu_len == 0 || mss == 0) throw std::invalid_argument("fragment_apdu needs apdu_len > 0 and mss > 0");
    std::vector<std::uint32_t> parts(apdu_len / mss, mss);
    if (apdu_len % mss != 0) parts.push_back(apdu_len % mss);
    return parts;
}

std::vector<NativePacket> generate_player_stream(const GameProfile& profile, Direction dir,
                                                 std::size_t n_packets, std::uint64_t seed,
                                                 std::uint32_t flow_id)
{
    if (n_packets == 0) throw std::invalid_argument("generate_player_stream needs n_packets > 0");
    validate(profile);
    const DirectionProfile& dp = profile.at(dir);
    const DirectionFieldModel& fields = profile.fields.at(dir);

    Rng root(seed);
    Rng data_rng(root.next());
    Rng ack_rng(root.next());
    Rng field_rng(root.next());

    const bool has_data = dp.ack_ratio < 1.0;
    const bool has_acks = dp.ack_ratio > 0.0;
    // Pure ACKs reuse the mixture shape, rescaled to their own mean gap.
    const double ack_gap_scale =
        has_acks ? 1.0 / (dp.ack_ratio * dp.packet_rate) / mixture_mean(dp.interpacket) : 0.0;

    constexpr TimeUs kNever = std::numeric_limits<TimeUs>::max();
    auto to_us = [](double seconds) { return static_cast<TimeUs>(std::llround(seconds * 1e6)); };

    double apdu_clock = 0.0;
    TimeUs last_data_us = 0;
    std::vector<PendingSegment> burst;
    std::size_t burst_pos = 0;
    auto refill_burst = [&] {
        apdu_clock += sample_mixture(dp.interpacket, data_rng);
        const TimeUs base = std::max(to_us(apdu_clock), last_data_us);
        const auto parts = fragment_apdu(sample_apdu(dp.apdu_sizes, data_rng), profile.mss);
        burst.clear();
        burst_pos = 0;
        for (std::size_t i = 0; i < parts.size(); ++i)
            burst.push_back({base + static_cast<TimeUs>(i) * kBurstSpacingUs, parts[i], i + 1 == parts.size()});
        last_data_us = burst.back().at_us;
    };

    double ack_clock = 0.0;
    TimeUs next_ack_us = kNever;
    auto advance_ack = [&] {
        ack_clock += sample_mixture(dp.interpacket, ack_rng) * ack_gap_scale;
        next_ack_us = to_us(ack_clock);
    };

    if (has_data) refill_burst();
    if (has_acks) advance_ack();

    std::uint32_t next_seq = static_cast<std::uint32_t>(field_rng.next());
    std::uint32_t ack = static_cast<std::uint32_t>(field_rng.next());
    auto window = static_cast<std::uint16_t>(field_rng.next());
    auto ipid = static_cast<std::uint16_t>(field_rng.next());

    std::vector<NativePacket> out;
    out.reserve(n_packets);
    while (out.size() < n_packets) {
        NativePacket p;
        p.direction = dir;
        p.flow_id = flow_id;
        const TimeUs data_us = has_data ? burst[burst_pos].at_us : kNever;
        if (data_us <= next_ack_us) {
            const PendingSegment seg = burst[burst_pos];
            p.arrival_us = seg.at_us;
            p.payload_len = seg.len;
            p.push = seg.last;
            if (++burst_pos == burst.size()) refill_burst();
        } else {
            p.arrival_us = next_ack_us;
            advance_ack();
        }

        if (!out.empty()) {
            ack = next_ack(ack, fields.ack, field_rng);
            window = next_window(window, fields.window, field_rng);
            ++ipid;
        }
        p.seq = next_seq;
        p.ack = ack;
        p.window = window;
        p.ipid = ipid;
        next_seq += p.payload_len;
        out.push_back(p);
    }
    return out;
}

std::vector<NativePacket> generate_scenario(const GameProfile& profile, Direction dir,
                                            std::uint32_t n_players,
                                            std::size_t packets_per_player, std::uint64_t seed)
{
    if (n_players == 0) throw std::invalid_argument("generate_scenario needs at least one player");
    validate(profile);
    std::vector<std::vector<NativePacket>> streams(n_players);
    const auto n = static_cast<std::int64_t>(n_players);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto flow = static_cast<std::uint32_t>(i);
        streams[i] = generate_player_stream(profile, dir, packets_per_player, player_seed(seed, flow), flow);
    }
    return merge_streams(streams);
}

std::vector<NativePacket> generate_scenario_serial(const GameProfile& profile, Direction dir,
                                                   std::uint32_t n_players,
                                                   std::size_t packets_per_player,
                                                   std::uint64_t seed)
{
    if (n_players == 0) throw std::invalid_argument("generate_scenario needs at least one player");
    validate(profile);
    std::vector<std::vector<NativePacket>> streams;
    streams.reserve(n_players);
    for (std::uint32_t flow = 0; flow < n_players; ++flow)
        streams.push_back(generate_player_stream(profile, dir, packets_per_player, player_seed(seed, flow), flow));
    return merge_streams(streams);
}

namespace {

// Normalized three-interval shape (mean 1); scaled to a target mean gap.
std::vector<UniformComponent> scaled_mixture(double mean_gap_s)
{
    const std::vector<UniformComponent> shape = {
        {0.02, 0.30, 0.40},
        {0.30, 1.20, 0.35},
        {1.20, 4.188, 0.25},
    };
    const double k = mean_gap_s / mixture_mean(shape);
    std::vector<UniformComponent> out;
    for (const auto& c : shape) out.push_back({c.lo_s * k, c.hi_s * k, c.weight});
    return out;
}

DirectionProfile single_size(double expected_payload, double pps)
{
    DirectionProfile dp;
    dp.expected_payload = expected_payload;
    dp.packet_rate = pps;
    dp.ack_ratio = 0.0;
    dp.apdu_sizes = DiscreteSizes{{{static_cast<std::uint32_t>(std::lround(expected_payload)), 1.0}}};
    dp.interpacket = scaled_mixture(1.0 / pps);
    return dp;
}

} // namespace

GameProfile wow_profile()
{
    GameProfile g;
    g.name = "wow";
    g.fields = wow_field_model();

    // Data packets carry 8.74 / 0.44 = 19.86 bytes on average.
    g.c2s.expected_payload = 8.74;
    g.c2s.packet_rate = 9.51;
    g.c2s.ack_ratio = 0.56;
    g.c2s.apdu_sizes = DiscreteSizes{{{6, 0.35}, {14, 0.4025}, {49, 0.2475}}};
    g.c2s.interpacket = scaled_mixture(1.0 / ((1.0 - 0.56) * 9.51));

    // Weibull(0.6, 326) APDUs average 1.1249 MSS segments of 436.1 bytes,
    // i.e. 314 bytes per packet once 28 % pure ACKs are mixed in.
    g.s2c.expected_payload = 314.0;
    g.s2c.packet_rate = 6.05;
    g.s2c.ack_ratio = 0.28;
    g.s2c.apdu_sizes = WeibullSizes{0.6, 326.0368};
    g.s2c.interpacket = scaled_mixture(1.1248636 / ((1.0 - 0.28) * 6.05));
    return g;
}

GameProfile shenzhou_profile()
{
    GameProfile g;
    g.name = "shenzhou";
    g.fields = wow_field_model();
    g.c2s = single_size(25.0, 8.0);
    g.s2c = single_size(114.0, 8.0);
    return g;
}

GameProfile rom_profile()
{
    GameProfile g;
    g.name = "rom";
    g.fields = wow_field_model();
    g.c2s = single_size(33.0, 4.17);
    g.s2c = single_size(99.0, 5.17);
    return g;
}

std::vector<GameProfile> builtin_profiles()
{
    return {wow_profile(), shenzhou_profile(), rom_profile()};
}

} // namespace tcm
