#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "tcm/field_model.hpp"
#include "tcm/packet.hpp"
#include "tcm/rng.hpp"

namespace tcm {

class CodecError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Record names a CID with no established context.
class ContextMissError : public CodecError
{
  public:
    using CodecError::CodecError;
};

/// Header bytes inconsistent with the mask, reserved bits, or the checksum.
class FramingError : public CodecError
{
  public:
    using CodecError::CodecError;
};

/// All 256 CIDs of an endpoint are in use.
class AdmissionError : public CodecError
{
  public:
    using CodecError::CodecError;
};

enum class RecordKind : std::uint8_t { FullHeader, CompressedTcp };

/// Mask byte layout of a COMPRESSED_TCP header: bit 7..0 = reserved,
/// reserved, U, W, A, S, P, I.
namespace mask_bits {
inline constexpr std::uint8_t I = 0x01;
inline constexpr std::uint8_t P = 0x02;
inline constexpr std::uint8_t S = 0x04;
inline constexpr std::uint8_t A = 0x08;
inline constexpr std::uint8_t W = 0x10;
inline constexpr std::uint8_t U = 0x20;
inline constexpr std::uint8_t Reserved = 0xC0;
} // namespace mask_bits

inline constexpr std::size_t kFullHeaderBytes = 40;
/// CID + mask + TCP checksum.
inline constexpr std::size_t kCompressedFixedBytes = 4;
/// Escape byte that announces a full field value.
inline constexpr std::uint8_t kEscape = 0x00;

/// One encoded header plus the length of the payload that follows it.
/// The header bytes are stored exactly as they appear on the wire.
class CompressedRecord
{
  public:
    CompressedRecord() = default;
    CompressedRecord(RecordKind kind, std::span<const std::uint8_t> header, std::uint32_t payload_len);

    RecordKind kind() const noexcept { return kind_; }
    std::uint32_t payload_len() const noexcept { return payload_len_; }
    std::size_t header_len() const noexcept { return len_; }
    std::span<const std::uint8_t> header() const noexcept { return {bytes_.data(), len_}; }

    std::uint8_t cid() const noexcept;
    /// Zero for full headers.
    std::uint8_t mask() const noexcept;
    std::uint16_t checksum() const noexcept;
    /// Delta-encoded W, A, S, I bytes (empty for full headers).
    std::span<const std::uint8_t> field_bytes() const noexcept;

    bool operator==(const CompressedRecord& other) const noexcept;

  private:
    RecordKind kind_ = RecordKind::CompressedTcp;
    std::uint8_t len_ = 0;
    std::uint32_t payload_len_ = 0;
    std::array<std::uint8_t, kFullHeaderBytes> bytes_{};
};

/// Per-flow state shared (and kept identical) by both tunnel ends.
struct CompressionContext
{
    std::uint8_t cid = 0;
    bool established = false;
    std::uint32_t last_seq = 0;
    std::uint32_t last_ack = 0;
    std::uint16_t last_window = 0;
    std::uint16_t last_ipid = 0;
    FlowEndpoints def_fields;
    std::uint32_t packets_since_full = 0;
    /// Compressed packets between full headers; 0 sends a full header only
    /// for the first packet of the flow.
    std::uint32_t refresh_interval = 0;

    bool operator==(const CompressionContext&) const = default;

    /// FNV-1a over every field; equal contexts give equal digests.
    std::uint64_t digest() const noexcept;
};

/// Encodes one packet against its flow context and advances the context.
CompressedRecord encode(const NativePacket& packet, CompressionContext& ctx);

/// Restores the header fields of an encoded packet and advances the
/// context. arrival_us of the result is 0; the caller supplies timing.
NativePacket decode(const CompressedRecord& record, CompressionContext& ctx);

/// Parses raw header bytes whose kind is known from the link layer
/// (the PPP protocol field in the real stack).
CompressedRecord parse_record(RecordKind kind, std::span<const std::uint8_t> header, std::uint32_t payload_len);

/// Compressor side of one tunnel endpoint: owns the CID allocator and the
/// contexts of every admitted flow.
class Compressor
{
  public:
    explicit Compressor(std::uint32_t refresh_interval = 0) : refresh_interval_(refresh_interval) {}

    CompressedRecord compress(const NativePacket& packet);

    /// Allocates a CID for the packet's flow if it has none yet.
    CompressionContext& admit(const NativePacket& packet);
    void release(std::uint32_t flow_id, Direction dir);

    const CompressionContext* context(std::uint32_t flow_id, Direction dir) const;
    std::size_t active_flows() const noexcept { return contexts_.size(); }

  private:
    static std::uint64_t key(std::uint32_t flow_id, Direction dir) noexcept
    {
        return (static_cast<std::uint64_t>(flow_id) << 1) | static_cast<std::uint64_t>(dir);
    }

    std::uint32_t refresh_interval_;
    std::unordered_map<std::uint64_t, CompressionContext> contexts_;
    std::array<bool, 256> cid_in_use_{};
};

/// Decompressor side: contexts indexed by CID, created by full headers.
class Decompressor
{
  public:
    explicit Decompressor(std::uint32_t refresh_interval = 0) : refresh_interval_(refresh_interval) {}

    NativePacket decompress(const CompressedRecord& record);
    const CompressionContext* context(std::uint8_t cid) const;

  private:
    std::uint32_t refresh_interval_;
    std::array<std::optional<CompressionContext>, 256> contexts_{};
};

/// Reference compressor loop over a time-sorted stream.
std::vector<CompressedRecord> compress_stream_serial(std::span<const NativePacket> packets, Compressor& compressor);

/// CIDs are assigned serially in first-appearance order, then each flow is
/// encoded in parallel. Output is identical to compress_stream_serial.
std::vector<CompressedRecord> compress_stream(std::span<const NativePacket> packets, Compressor& compressor);

/// 4 fixed bytes + 1 ipid byte + expected W, A, S bytes.
double expected_reduced_header(const FieldDeltaModel& model, Direction dir);

/// Draws one compressed header size from the field model (fields independent).
std::uint32_t sample_header_size(const FieldDeltaModel& model, Direction dir, Rng& rng);

std::vector<std::uint32_t> sample_header_sizes(const FieldDeltaModel& model, Direction dir, std::size_t n,
                                               std::uint64_t seed);

} // namespace tcm
