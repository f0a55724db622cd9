#include "tcm/iphc_codec.hpp"

#include <algorithm>
#include <string>

namespace tcm {

namespace {

void put16(std::uint8_t* p, std::uint16_t v)
{
    p[0] = static_cast<std::uint8_t>(v >> 8);
    p[1] = static_cast<std::uint8_t>(v);
}

void put32(std::uint8_t* p, std::uint32_t v)
{
    put16(p, static_cast<std::uint16_t>(v >> 16));
    put16(p + 2, static_cast<std::uint16_t>(v));
}

std::uint16_t get16(const std::uint8_t* p)
{
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t get32(const std::uint8_t* p)
{
    return (static_cast<std::uint32_t>(get16(p)) << 16) | get16(p + 2);
}

std::uint16_t ip_header_checksum(const std::uint8_t* hdr)
{
    std::uint32_t sum = 0;
    for (int i = 0; i < 20; i += 2)
        if (i != 10) sum += get16(hdr + i);
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

constexpr std::uint8_t kTcpAck = 0x10;
constexpr std::uint8_t kTcpPsh = 0x08;

std::array<std::uint8_t, kFullHeaderBytes> build_full_header(const NativePacket& p, std::uint8_t cid,
                                                             std::uint16_t checksum)
{
    const FlowEndpoints ep = endpoints_for(p.flow_id, p.direction);
    std::array<std::uint8_t, kFullHeaderBytes> h{};
    h[0] = 0x45;
    h[1] = 0x00;
    // the total length field carries the CID; length comes from the link layer
    h[2] = 0x00;
    h[3] = cid;
    put16(&h[4], p.ipid);
    put16(&h[6], 0x4000);
    h[8] = 64;
    h[9] = 6;
    put32(&h[12], ep.src_addr);
    put32(&h[16], ep.dst_addr);
    put16(&h[10], ip_header_checksum(h.data()));
    put16(&h[20], ep.src_port);
    put16(&h[22], ep.dst_port);
    put32(&h[24], p.seq);
    put32(&h[28], p.ack);
    h[32] = 0x50;
    h[33] = kTcpAck | (p.push ? kTcpPsh : 0);
    put16(&h[34], p.window);
    put16(&h[36], checksum);
    return h;
}

class FieldWriter
{
  public:
    explicit FieldWriter(std::uint8_t* out) : out_(out) {}

    void byte(std::uint8_t v) { out_[n_++] = v; }
    void u16(std::uint16_t v)
    {
        put16(out_ + n_, v);
        n_ += 2;
    }
    void u32(std::uint32_t v)
    {
        put32(out_ + n_, v);
        n_ += 4;
    }
    std::size_t size() const { return n_; }

  private:
    std::uint8_t* out_;
    std::size_t n_ = 0;
};

class FieldReader
{
  public:
    explicit FieldReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t byte()
    {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16()
    {
        need(2);
        const auto v = get16(&in_[pos_]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        need(4);
        const auto v = get32(&in_[pos_]);
        pos_ += 4;
        return v;
    }
    bool done() const { return pos_ == in_.size(); }

  private:
    void need(std::size_t n) const
    {
        if (pos_ + n > in_.size()) throw FramingError("compressed header shorter than its mask requires");
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void store_fields(CompressionContext& ctx, const NativePacket& p)
{
    ctx.last_seq = p.seq;
    ctx.last_ack = p.ack;
    ctx.last_window = p.window;
    ctx.last_ipid = p.ipid;
}

} // namespace

CompressedRecord::CompressedRecord(RecordKind kind, std::span<const std::uint8_t> header, std::uint32_t payload_len)
    : kind_(kind), payload_len_(payload_len)
{
    if (kind == RecordKind::FullHeader && header.size() != kFullHeaderBytes)
        throw FramingError("full header must be 40 bytes, got " + std::to_string(header.size()));
    if (kind == RecordKind::CompressedTcp &&
        (header.size() < kCompressedFixedBytes || header.size() > kFullHeaderBytes))
        throw FramingError("compressed header length " + std::to_string(header.size()) + " out of range");
    len_ = static_cast<std::uint8_t>(header.size());
    std::copy(header.begin(), header.end(), bytes_.begin());
}

std::uint8_t CompressedRecord::cid() const noexcept
{
    return kind_ == RecordKind::FullHeader ? bytes_[3] : bytes_[0];
}

std::uint8_t CompressedRecord::mask() const noexcept
{
    return kind_ == RecordKind::FullHeader ? 0 : bytes_[1];
}

std::uint16_t CompressedRecord::checksum() const noexcept
{
    return kind_ == RecordKind::FullHeader ? get16(&bytes_[36]) : get16(&bytes_[2]);
}

std::span<const std::uint8_t> CompressedRecord::field_bytes() const noexcept
{
    if (kind_ == RecordKind::FullHeader) return {};
    return {bytes_.data() + kCompressedFixedBytes, len_ - kCompressedFixedBytes};
}

bool CompressedRecord::operator==(const CompressedRecord& other) const noexcept
{
    return kind_ == other.kind_ && payload_len_ == other.payload_len_ &&
           std::ranges::equal(header(), other.header());
}

std::uint64_t CompressionContext::digest() const noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) {
            h ^= (v >> (8 * i)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    };
    mix(cid, 1);
    mix(established, 1);
    mix(last_seq, 4);
    mix(last_ack, 4);
    mix(last_window, 2);
    mix(last_ipid, 2);
    mix(def_fields.src_addr, 4);
    mix(def_fields.dst_addr, 4);
    mix(def_fields.src_port, 2);
    mix(def_fields.dst_port, 2);
    mix(packets_since_full, 4);
    mix(refresh_interval, 4);
    return h;
}

CompressedRecord encode(const NativePacket& p, CompressionContext& ctx)
{
    const std::uint16_t checksum = tcp_checksum(p);
    const FlowEndpoints ep = endpoints_for(p.flow_id, p.direction);
    const bool refresh = ctx.refresh_interval > 0 && ctx.packets_since_full >= ctx.refresh_interval;

    if (!ctx.established || refresh || ep != ctx.def_fields) {
        const auto header = build_full_header(p, ctx.cid, checksum);
        ctx.established = true;
        ctx.def_fields = ep;
        ctx.packets_since_full = 0;
        store_fields(ctx, p);
        return CompressedRecord(RecordKind::FullHeader, header, p.payload_len);
    }

    std::array<std::uint8_t, kFullHeaderBytes> buf{};
    buf[0] = ctx.cid;
    put16(&buf[2], checksum);
    FieldWriter w(buf.data() + kCompressedFixedBytes);
    std::uint8_t mask = p.push ? mask_bits::P : 0;

    const auto dw = static_cast<std::int16_t>(static_cast<std::uint16_t>(p.window - ctx.last_window));
    if (dw != 0) {
        mask |= mask_bits::W;
        if (dw >= -128 && dw <= 127) {
            w.byte(static_cast<std::uint8_t>(static_cast<std::int8_t>(dw)));
        } else {
            w.byte(kEscape);
            w.u16(p.window);
        }
    }
    auto delta32 = [&](std::uint32_t now, std::uint32_t before, std::uint8_t bit) {
        const std::uint32_t d = now - before;
        if (d == 0) return;
        mask |= bit;
        if (d <= 255) {
            w.byte(static_cast<std::uint8_t>(d));
        } else {
            w.byte(kEscape);
            w.u32(now);
        }
    };
    delta32(p.ack, ctx.last_ack, mask_bits::A);
    delta32(p.seq, ctx.last_seq, mask_bits::S);
    const auto di = static_cast<std::uint16_t>(p.ipid - ctx.last_ipid);
    if (di != 0) {
        mask |= mask_bits::I;
        if (di <= 255) {
            w.byte(static_cast<std::uint8_t>(di));
        } else {
            w.byte(kEscape);
            w.u16(p.ipid);
        }
    }
    buf[1] = mask;

    ++ctx.packets_since_full;
    store_fields(ctx, p);
    return CompressedRecord(RecordKind::CompressedTcp, {buf.data(), kCompressedFixedBytes + w.size()},
                            p.payload_len);
}

NativePacket decode(const CompressedRecord& record, CompressionContext& ctx)
{
    NativePacket p;
    p.payload_len = record.payload_len();

    if (record.kind() == RecordKind::FullHeader) {
        const auto h = record.header();
        if (h[0] != 0x45 || h[9] != 6) throw FramingError("full header is not TCP/IPv4 without options");
        if (get16(&h[10]) != ip_header_checksum(h.data())) throw FramingError("IP header checksum mismatch");
        if (h[32] != 0x50 || (h[33] & ~(kTcpAck | kTcpPsh)) != 0 || get16(&h[38]) != 0)
            throw FramingError("unsupported TCP options, flags or urgent pointer in full header");
        FlowEndpoints ep{get32(&h[12]), get32(&h[16]), get16(&h[20]), get16(&h[22])};
        try {
            std::tie(p.flow_id, p.direction) = flow_from_endpoints(ep);
        } catch (const std::invalid_argument& e) {
            throw FramingError(e.what());
        }
        p.ipid = get16(&h[4]);
        p.seq = get32(&h[24]);
        p.ack = get32(&h[28]);
        p.push = (h[33] & kTcpPsh) != 0;
        p.window = get16(&h[34]);
        if (tcp_checksum(p) != record.checksum()) throw FramingError("TCP checksum mismatch after decompression");

        ctx.cid = record.cid();
        ctx.established = true;
        ctx.def_fields = ep;
        ctx.packets_since_full = 0;
        store_fields(ctx, p);
        return p;
    }

    if (!ctx.established || ctx.cid != record.cid())
        throw ContextMissError("no context for CID " + std::to_string(record.cid()));
    const std::uint8_t mask = record.mask();
    if (mask & mask_bits::Reserved) throw FramingError("reserved mask bits set");
    if (mask & mask_bits::U) throw FramingError("urgent pointer is never compressed in this profile");

    std::tie(p.flow_id, p.direction) = flow_from_endpoints(ctx.def_fields);
    p.push = (mask & mask_bits::P) != 0;
    p.window = ctx.last_window;
    p.ack = ctx.last_ack;
    p.seq = ctx.last_seq;
    p.ipid = ctx.last_ipid;

    FieldReader r(record.field_bytes());
    if (mask & mask_bits::W) {
        const std::uint8_t b = r.byte();
        if (b == kEscape)
            p.window = r.u16();
        else
            p.window = static_cast<std::uint16_t>(p.window + static_cast<std::int8_t>(b));
    }
    auto read32 = [&r](std::uint32_t& field) {
        const std::uint8_t b = r.byte();
        if (b == kEscape)
            field = r.u32();
        else
            field += b;
    };
    if (mask & mask_bits::A) read32(p.ack);
    if (mask & mask_bits::S) read32(p.seq);
    if (mask & mask_bits::I) {
        const std::uint8_t b = r.byte();
        if (b == kEscape)
            p.ipid = r.u16();
        else
            p.ipid = static_cast<std::uint16_t>(p.ipid + b);
    }
    if (!r.done()) throw FramingError("compressed header carries bytes not announced by its mask");
    if (tcp_checksum(p) != record.checksum()) throw FramingError("TCP checksum mismatch after decompression");

    ++ctx.packets_since_full;
    store_fields(ctx, p);
    return p;
}

CompressedRecord parse_record(RecordKind kind, std::span<const std::uint8_t> header, std::uint32_t payload_len)
{
    return CompressedRecord(kind, header, payload_len);
}

CompressionContext& Compressor::admit(const NativePacket& packet)
{
    const auto k = key(packet.flow_id, packet.direction);
    if (auto it = contexts_.find(k); it != contexts_.end()) return it->second;
    const auto free_cid = std::find(cid_in_use_.begin(), cid_in_use_.end(), false);
    if (free_cid == cid_in_use_.end())
        throw AdmissionError("CID space exhausted: 256 flows already active on this endpoint");
    *free_cid = true;
    CompressionContext ctx;
    ctx.cid = static_cast<std::uint8_t>(free_cid - cid_in_use_.begin());
    ctx.refresh_interval = refresh_interval_;
    return contexts_.emplace(k, ctx).first->second;
}

void Compressor::release(std::uint32_t flow_id, Direction dir)
{
    const auto it = contexts_.find(key(flow_id, dir));
    if (it == contexts_.end()) return;
    cid_in_use_[it->second.cid] = false;
    contexts_.erase(it);
}

const CompressionContext* Compressor::context(std::uint32_t flow_id, Direction dir) const
{
    const auto it = contexts_.find(key(flow_id, dir));
    return it == contexts_.end() ? nullptr : &it->second;
}

CompressedRecord Compressor::compress(const NativePacket& packet)
{
    return encode(packet, admit(packet));
}

NativePacket Decompressor::decompress(const CompressedRecord& record)
{
    auto& slot = contexts_[record.cid()];
    if (record.kind() == RecordKind::FullHeader) {
        CompressionContext fresh;
        fresh.refresh_interval = refresh_interval_;
        CompressionContext& ctx = slot ? *slot : fresh;
        NativePacket p = decode(record, ctx);
        if (!slot) slot = ctx;
        return p;
    }
    if (!slot) throw ContextMissError("no context for CID " + std::to_string(record.cid()));
    return decode(record, *slot);
}

const CompressionContext* Decompressor::context(std::uint8_t cid) const
{
    return contexts_[cid] ? &*contexts_[cid] : nullptr;
}

std::vector<CompressedRecord> compress_stream_serial(std::span<const NativePacket> packets, Compressor& compressor)
{
    std::vector<CompressedRecord> out;
    out.reserve(packets.size());
    for (const auto& p : packets) out.push_back(compressor.compress(p));
    return out;
}

std::vector<CompressedRecord> compress_stream(std::span<const NativePacket> packets, Compressor& compressor)
{
    // CIDs are unique among live contexts, so they index the flows directly
    std::vector<CompressionContext*> flow_ctx;
    std::array<std::int32_t, 256> flow_index;
    flow_index.fill(-1);
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < packets.size(); ++i) {
        CompressionContext* ctx = &compressor.admit(packets[i]);
        auto& slot = flow_index[ctx->cid];
        if (slot < 0) {
            slot = static_cast<std::int32_t>(flow_ctx.size());
            flow_ctx.push_back(ctx);
            members.emplace_back();
        }
        members[static_cast<std::size_t>(slot)].push_back(i);
    }

    std::vector<CompressedRecord> out(packets.size());
    const auto n_flows = static_cast<std::int64_t>(flow_ctx.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t f = 0; f < n_flows; ++f)
        for (const std::size_t i : members[f]) out[i] = encode(packets[i], *flow_ctx[f]);
    return out;
}

double expected_reduced_header(const FieldDeltaModel& model, Direction dir)
{
    validate(model);
    const DirectionFieldModel& m = model.at(dir);
    return static_cast<double>(kCompressedFixedBytes) + 1.0 + expected_window_bytes(m.window) +
           expected_seq_ack_bytes(m.ack) + expected_seq_ack_bytes(m.seq);
}

namespace {
std::uint32_t sample_field(const FieldChangeProbs& p, std::uint32_t full_bytes, Rng& rng)
{
    const double u = rng.uniform01();
    if (u < p.no_change) return 0;
    if (u < p.no_change + p.one_byte) return 1;
    return full_bytes;
}
} // namespace

std::uint32_t sample_header_size(const FieldDeltaModel& model, Direction dir, Rng& rng)
{
    const DirectionFieldModel& m = model.at(dir);
    return static_cast<std::uint32_t>(kCompressedFixedBytes) + 1 + sample_field(m.window, 3, rng) +
           sample_field(m.ack, 5, rng) + sample_field(m.seq, 5, rng);
}

std::vector<std::uint32_t> sample_header_sizes(const FieldDeltaModel& model, Direction dir, std::size_t n,
                                               std::uint64_t seed)
{
    validate(model);
    Rng rng(seed);
    std::vector<std::uint32_t> out(n);
    for (auto& s : out) s = sample_header_size(model, dir, rng);
    return out;
}

} // namespace tcm
