#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tcm/iphc_codec.hpp"
#include "tcm/packet.hpp"

namespace tcm {

struct MuxConfig
{
    TimeUs period_us = 60'000;
    std::uint32_t size_threshold = 1350;
    /// Tunnel header shared by a bundle: IPv4 20 + L2TPv3 4 + PPP 1.
    std::uint32_t common_header = 25;
    /// PPPMux sub-frame header per member.
    std::uint32_t muxed_header = 2;
    std::uint32_t mtu = 1500;
};

/// Throws std::invalid_argument on period <= 0 or threshold >= mtu.
void validate(const MuxConfig& cfg);

/// A compressed packet waiting in (or carried by) a bundle.
struct MuxEntry
{
    CompressedRecord record;
    TimeUs arrival_us = 0;
    std::uint32_t flow_id = 0;
};

enum class FlushCause : std::uint8_t { PeriodEnd, ThresholdReached };

std::string_view to_string(FlushCause cause) noexcept;
FlushCause parse_flush_cause(std::string_view text);

struct Bundle
{
    TimeUs send_us = 0;
    std::vector<MuxEntry> records;
    FlushCause cause = FlushCause::PeriodEnd;
    std::uint32_t wire_size = 0;
};

/// CH + sum over members of (MH + compressed header + payload).
std::uint32_t bundle_wire_size(std::span<const MuxEntry> records, const MuxConfig& cfg) noexcept;

/// Pairs each packet with its compressed record.
std::vector<MuxEntry> make_entries(std::span<const NativePacket> packets, std::span<const CompressedRecord> records);

struct MuxResult
{
    std::vector<Bundle> bundles;
    /// Bundles whose wire size ended above the MTU.
    std::size_t oversize_bundles = 0;
};

/// Period + threshold policy. Periods are clock aligned, [k*PE, (k+1)*PE),
/// and a packet arriving exactly on a boundary closes the ending period.
/// Non-empty accumulations are flushed at period end; after each append the
/// bundle is flushed immediately once its wire size reaches the threshold.
/// Input must be sorted by arrival time.
MuxResult multiplex(std::span<const MuxEntry> entries, const MuxConfig& cfg);

struct DemuxedPacket
{
    /// Header fields as rebuilt by the decompressor; arrival_us is the
    /// native arrival time recorded by the multiplexer.
    NativePacket packet;
    TimeUs delivery_us = 0;
};

class DemuxError : public CodecError
{
  public:
    DemuxError(std::size_t bundle_index, const std::string& what);
    std::size_t bundle_index() const noexcept { return bundle_index_; }

  private:
    std::size_t bundle_index_;
};

/// Rebuilds native packets in send order. Codec failures are rethrown as
/// DemuxError carrying the offending bundle index.
std::vector<DemuxedPacket> demultiplex(std::span<const Bundle> bundles, Decompressor& contexts,
                                       TimeUs network_delay_us = 0);

struct DelayStats
{
    std::size_t count = 0;
    double mean_us = 0.0;
    double stdev_us = 0.0;
    TimeUs max_us = 0;
    TimeUs bucket_us = 1000;
    /// histogram[i] counts delays in [i*bucket, (i+1)*bucket).
    std::vector<std::size_t> histogram;
};

DelayStats added_delay_stats(std::span<const Bundle> bundles, TimeUs bucket_us = 1000);

/// Delay added to every member packet, in bundle order.
std::vector<TimeUs> added_delays(std::span<const Bundle> bundles);

/// Test harness: drops each bundle independently with probability p.
struct LossResult
{
    std::vector<Bundle> delivered;
    std::vector<std::size_t> dropped_indices;
    std::size_t lost_packets = 0;
};

LossResult inject_bundle_loss(std::span<const Bundle> bundles, double loss_probability, std::uint64_t seed);

} // namespace tcm
