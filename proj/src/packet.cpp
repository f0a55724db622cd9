#include "tcm/packet.hpp"

#include <cmath>
#include <stdexcept>

#include "tcm/rng.hpp"

namespace tcm {

std::string_view to_string(Direction dir) noexcept
{
    return dir == Direction::ClientToServer ? "c2s" : "s2c";
}

Direction parse_direction(std::string_view text)
{
    if (text == "c2s" || text == "uplink") return Direction::ClientToServer;
    if (text == "s2c" || text == "downlink") return Direction::ServerToClient;
    throw std::invalid_argument("unknown direction '" + std::string(text) + "' (expected c2s or s2c)");
}

bool same_header(const NativePacket& a, const NativePacket& b) noexcept
{
    return a.direction == b.direction && a.flow_id == b.flow_id && a.payload_len == b.payload_len &&
           a.push == b.push && a.seq == b.seq && a.ack == b.ack && a.window == b.window &&
           a.ipid == b.ipid;
}

namespace {
constexpr std::uint32_t kClientBase = 0x0A000001; // 10.0.0.1
constexpr std::uint32_t kClientSpan = 0x00FFFFFE;
} // namespace

FlowEndpoints endpoints_for(std::uint32_t flow_id, Direction dir) noexcept
{
    const std::uint32_t client = kClientBase + (flow_id % kClientSpan);
    const auto client_port = static_cast<std::uint16_t>(49152 + (flow_id % 16384));
    if (dir == Direction::ClientToServer) return {client, kServerAddr, client_port, kServerPort};
    return {kServerAddr, client, kServerPort, client_port};
}

std::pair<std::uint32_t, Direction> flow_from_endpoints(const FlowEndpoints& ep)
{
    Direction dir;
    std::uint32_t client;
    if (ep.dst_addr == kServerAddr && ep.dst_port == kServerPort) {
        dir = Direction::ClientToServer;
        client = ep.src_addr;
    } else if (ep.src_addr == kServerAddr && ep.src_port == kServerPort) {
        dir = Direction::ServerToClient;
        client = ep.dst_addr;
    } else {
        throw std::invalid_argument("endpoints do not belong to a simulated game flow");
    }
    if (client < kClientBase || client - kClientBase >= kClientSpan)
        throw std::invalid_argument("client address outside the simulated range");
    const std::uint32_t flow = client - kClientBase;
    if (endpoints_for(flow, dir) != ep) throw std::invalid_argument("inconsistent client port");
    return {flow, dir};
}

std::uint16_t tcp_checksum(const NativePacket& p) noexcept
{
    const FlowEndpoints ep = endpoints_for(p.flow_id, p.direction);
    std::uint32_t sum = 0;
    auto add16 = [&sum](std::uint32_t v) { sum += v & 0xFFFF; };
    auto add32 = [&](std::uint32_t v) {
        add16(v >> 16);
        add16(v);
    };
    // pseudo header
    add32(ep.src_addr);
    add32(ep.dst_addr);
    add16(6);
    add16(20 + p.payload_len);
    // TCP header with a zero checksum field; the payload is all zeros
    add16(ep.src_port);
    add16(ep.dst_port);
    add32(p.seq);
    add32(p.ack);
    add16(0x5000u | 0x10u | (p.push ? 0x08u : 0u));
    add16(p.window);
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

double Rng::normal(double mean, double stdev)
{
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    constexpr double kTwoPi = 6.283185307179586476925;
    return mean + stdev * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

} // namespace tcm
