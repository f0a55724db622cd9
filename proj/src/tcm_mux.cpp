#include "tcm/tcm_mux.hpp"

#include <cmath>
#include <string>

#include "tcm/rng.hpp"

namespace tcm {

void validate(const MuxConfig& cfg)
{
    if (cfg.period_us <= 0) throw std::invalid_argument("multiplexing period must be positive");
    if (cfg.size_threshold >= cfg.mtu) throw std::invalid_argument("size threshold must be below the MTU");
}

std::string_view to_string(FlushCause cause) noexcept
{
    return cause == FlushCause::PeriodEnd ? "period" : "threshold";
}

FlushCause parse_flush_cause(std::string_view text)
{
    if (text == "period") return FlushCause::PeriodEnd;
    if (text == "threshold") return FlushCause::ThresholdReached;
    throw std::invalid_argument("unknown flush cause '" + std::string(text) + "'");
}

std::uint32_t bundle_wire_size(std::span<const MuxEntry> records, const MuxConfig& cfg) noexcept
{
    std::uint32_t size = cfg.common_header;
    for (const auto& e : records)
        size += cfg.muxed_header + static_cast<std::uint32_t>(e.record.header_len()) + e.record.payload_len();
    return size;
}

std::vector<MuxEntry> make_entries(std::span<const NativePacket> packets, std::span<const CompressedRecord> records)
{
    if (packets.size() != records.size()) throw std::invalid_argument("packet and record counts differ");
    std::vector<MuxEntry> out;
    out.reserve(packets.size());
    for (std::size_t i = 0; i < packets.size(); ++i) out.push_back({records[i], packets[i].arrival_us, packets[i].flow_id});
    return out;
}

MuxResult multiplex(std::span<const MuxEntry> entries, const MuxConfig& cfg)
{
    validate(cfg);
    MuxResult result;
    Bundle open;
    open.wire_size = cfg.common_header;
    TimeUs period_end = 0;

    auto flush = [&](TimeUs at, FlushCause cause) {
        open.send_us = at;
        open.cause = cause;
        if (open.wire_size > cfg.mtu) ++result.oversize_bundles;
        result.bundles.push_back(std::move(open));
        open = Bundle{};
        open.wire_size = cfg.common_header;
    };

    TimeUs last_arrival = 0;
    for (const auto& e : entries) {
        if (e.arrival_us < last_arrival) throw std::invalid_argument("multiplex input is not sorted by arrival time");
        last_arrival = e.arrival_us;
        // a packet on a boundary belongs to the period that ends there;
        // the first period is [0, PE]
        const TimeUs end =
            e.arrival_us <= 0 ? cfg.period_us : ((e.arrival_us + cfg.period_us - 1) / cfg.period_us) * cfg.period_us;
        if (!open.records.empty() && end != period_end) flush(period_end, FlushCause::PeriodEnd);
        period_end = end;

        open.records.push_back(e);
        open.wire_size += cfg.muxed_header + static_cast<std::uint32_t>(e.record.header_len()) + e.record.payload_len();
        if (open.wire_size >= cfg.size_threshold) flush(e.arrival_us, FlushCause::ThresholdReached);
    }
    if (!open.records.empty()) flush(period_end, FlushCause::PeriodEnd);
    return result;
}

DemuxError::DemuxError(std::size_t bundle_index, const std::string& what)
    : CodecError("bundle " + std::to_string(bundle_index) + ": " + what), bundle_index_(bundle_index)
{
}

std::vector<DemuxedPacket> demultiplex(std::span<const Bundle> bundles, Decompressor& contexts,
                                       TimeUs network_delay_us)
{
    std::vector<DemuxedPacket> out;
    for (std::size_t b = 0; b < bundles.size(); ++b) {
        for (const auto& e : bundles[b].records) {
            try {
                DemuxedPacket d;
                d.packet = contexts.decompress(e.record);
                d.packet.arrival_us = e.arrival_us;
                d.delivery_us = bundles[b].send_us + network_delay_us;
                out.push_back(d);
            } catch (const CodecError& err) {
                throw DemuxError(b, err.what());
            }
        }
    }
    return out;
}

std::vector<TimeUs> added_delays(std::span<const Bundle> bundles)
{
    std::vector<TimeUs> out;
    for (const auto& b : bundles)
        for (const auto& e : b.records) out.push_back(b.send_us - e.arrival_us);
    return out;
}

DelayStats added_delay_stats(std::span<const Bundle> bundles, TimeUs bucket_us)
{
    if (bucket_us <= 0) throw std::invalid_argument("histogram bucket width must be positive");
    DelayStats s;
    s.bucket_us = bucket_us;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& b : bundles) {
        for (const auto& e : b.records) {
            const TimeUs d = b.send_us - e.arrival_us;
            ++s.count;
            sum += static_cast<double>(d);
            sum_sq += static_cast<double>(d) * static_cast<double>(d);
            s.max_us = std::max(s.max_us, d);
            const auto bucket = static_cast<std::size_t>(d / bucket_us);
            if (bucket >= s.histogram.size()) s.histogram.resize(bucket + 1, 0);
            ++s.histogram[bucket];
        }
    }
    if (s.count > 0) {
        const auto n = static_cast<double>(s.count);
        s.mean_us = sum / n;
        s.stdev_us = std::sqrt(std::max(0.0, sum_sq / n - s.mean_us * s.mean_us));
    }
    return s;
}

LossResult inject_bundle_loss(std::span<const Bundle> bundles, double loss_probability, std::uint64_t seed)
{
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
        throw std::invalid_argument("loss probability outside [0,1]");
    Rng rng(seed);
    LossResult r;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        if (rng.uniform01() < loss_probability) {
            r.dropped_indices.push_back(i);
            r.lost_packets += bundles[i].records.size();
        } else {
            r.delivered.push_back(bundles[i]);
        }
    }
    return r;
}

} // namespace tcm
