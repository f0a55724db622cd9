#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tcm/field_model.hpp"
#include "tcm/packet.hpp"

namespace tcm {

class ProfileError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// APDU size drawn from a finite table of (bytes, probability).
struct DiscreteSizes
{
    std::vector<std::pair<std::uint32_t, double>> entries;
    bool operator==(const DiscreteSizes&) const = default;
};

/// APDU size drawn from Weibull(shape, scale), rounded to whole bytes (min 1).
struct WeibullSizes
{
    double shape = 1.0;
    double scale = 1.0;
    bool operator==(const WeibullSizes&) const = default;
};

using ApduSizeDist = std::variant<DiscreteSizes, WeibullSizes>;

/// One component of the inter-APDU time mixture, in seconds.
struct UniformComponent
{
    double lo_s = 0.0;
    double hi_s = 0.0;
    double weight = 0.0;
    bool operator==(const UniformComponent&) const = default;
};

struct DirectionProfile
{
    /// Target mean payload over all packets, pure ACKs counted as 0 bytes.
    double expected_payload = 0.0;
    /// Target packet rate including pure ACKs.
    double packet_rate = 0.0;
    /// Fraction of packets that are pure ACKs.
    double ack_ratio = 0.0;
    ApduSizeDist apdu_sizes;
    std::vector<UniformComponent> interpacket;

    bool operator==(const DirectionProfile&) const = default;
};

struct GameProfile
{
    std::string name;
    std::uint32_t mtu = 1500;
    std::uint32_t mss = 1460;
    DirectionProfile c2s;
    DirectionProfile s2c;
    FieldDeltaModel fields;

    const DirectionProfile& at(Direction dir) const noexcept
    {
        return dir == Direction::ClientToServer ? c2s : s2c;
    }

    bool operator==(const GameProfile&) const = default;
};

/// Throws ProfileError describing the first violated invariant.
void validate(const GameProfile& profile);

double mixture_mean(const std::vector<UniformComponent>& mixture) noexcept;

/// Splits an APDU into MSS-sized segments; only the last may be shorter.
std::vector<std::uint32_t> fragment_apdu(std::uint32_t apdu_len, std::uint32_t mss);

/// Gap between consecutive fragments of one burst.
inline constexpr TimeUs kBurstSpacingUs = 1;

/// Generates one player's packet stream in one direction.
///
/// APDUs and their inter-arrival times are drawn from the profile, APDUs
/// larger than the MSS are split into a back-to-back burst, and pure ACKs are
/// merged in as an independent process whose rate is ack_ratio x packet_rate.
/// Window and ack deltas follow the profile's field model; seq advances by
/// the payload bytes sent and ipid by one per packet. Initial seq, ack,
/// window and ipid are random per flow.
std::vector<NativePacket> generate_player_stream(const GameProfile& profile, Direction dir,
                                                 std::size_t n_packets, std::uint64_t seed,
                                                 std::uint32_t flow_id = 0);

/// Seed used for player i of a scenario; player 0 uses the scenario seed.
inline constexpr std::uint64_t player_seed(std::uint64_t seed, std::uint32_t player) noexcept
{
    return seed + player;
}

/// Merges n_players independent streams (flow ids 0..n-1) into one
/// time-sorted sequence; ties are broken by flow id. Streams are generated
/// in parallel.
std::vector<NativePacket> generate_scenario(const GameProfile& profile, Direction dir,
                                            std::uint32_t n_players,
                                            std::size_t packets_per_player, std::uint64_t seed);

/// Single-threaded reference for generate_scenario; output is identical.
std::vector<NativePacket> generate_scenario_serial(const GameProfile& profile, Direction dir,
                                                   std::uint32_t n_players,
                                                   std::size_t packets_per_player,
                                                   std::uint64_t seed);

GameProfile wow_profile();
GameProfile shenzhou_profile();
GameProfile rom_profile();

/// wow, shenzhou, rom in that order.
std::vector<GameProfile> builtin_profiles();

} // namespace tcm
