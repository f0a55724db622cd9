#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tcm {

enum class Direction : std::uint8_t { ClientToServer, ServerToClient };

inline constexpr Direction kDirections[] = {Direction::ClientToServer, Direction::ServerToClient};

/// Native TCP/IPv4 header size (no options).
inline constexpr std::uint32_t kNativeHeaderBytes = 40;

std::string_view to_string(Direction dir) noexcept;

/// Parses "c2s"/"s2c" (also "uplink"/"downlink"). Throws std::invalid_argument.
Direction parse_direction(std::string_view text);

/// Microseconds since the start of the simulation.
using TimeUs = std::int64_t;

struct NativePacket
{
    TimeUs arrival_us = 0;
    Direction direction = Direction::ClientToServer;
    std::uint32_t flow_id = 0;
    std::uint32_t payload_len = 0;
    bool push = false;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint16_t window = 0;
    std::uint16_t ipid = 0;

    bool is_pure_ack() const noexcept { return payload_len == 0; }
    std::uint32_t wire_size() const noexcept { return payload_len + kNativeHeaderBytes; }

    bool operator==(const NativePacket&) const = default;
};

/// True when every header-level field matches; arrival time is ignored.
bool same_header(const NativePacket& a, const NativePacket& b) noexcept;

/// Constant per-flow fields (the DEF fields of the compressor).
struct FlowEndpoints
{
    std::uint32_t src_addr = 0;
    std::uint32_t dst_addr = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;

    bool operator==(const FlowEndpoints&) const = default;
};

inline constexpr std::uint32_t kServerAddr = 0x0C810001; // 12.129.0.1
inline constexpr std::uint16_t kServerPort = 3724;

/// Client address 10.0.0.0 + flow + 1; the flow id is recoverable from the
/// endpoints, so a decompressor can restore it without side information.
FlowEndpoints endpoints_for(std::uint32_t flow_id, Direction dir) noexcept;

/// Inverse of endpoints_for. Throws std::invalid_argument for foreign addresses.
std::pair<std::uint32_t, Direction> flow_from_endpoints(const FlowEndpoints& ep);

/// TCP checksum of the packet's synthetic segment (payload bytes are zero).
std::uint16_t tcp_checksum(const NativePacket& p) noexcept;

} // namespace tcm
