#pragma once

#include "tcm/packet.hpp"

namespace tcm {

/// Probability that a compressible field is unchanged, changes by a
/// one-byte delta, or needs the escape byte plus the full value.
struct FieldChangeProbs
{
    double no_change = 1.0;
    double one_byte = 0.0;
    double full = 0.0;

    bool operator==(const FieldChangeProbs&) const = default;
};

struct DirectionFieldModel
{
    FieldChangeProbs window;
    FieldChangeProbs ack;
    FieldChangeProbs seq;

    bool operator==(const DirectionFieldModel&) const = default;
};

/// Per-direction change statistics of the W, A and S header fields.
struct FieldDeltaModel
{
    DirectionFieldModel c2s;
    DirectionFieldModel s2c;

    const DirectionFieldModel& at(Direction dir) const noexcept
    {
        return dir == Direction::ClientToServer ? c2s : s2c;
    }
    DirectionFieldModel& at(Direction dir) noexcept
    {
        return dir == Direction::ClientToServer ? c2s : s2c;
    }

    bool operator==(const FieldDeltaModel&) const = default;
};

/// Encoded size of a full window value after the escape byte.
inline constexpr double kWindowFullBytes = 3.0;
/// Encoded size of a full ack/seq value after the escape byte.
inline constexpr double kSeqAckFullBytes = 5.0;

double expected_window_bytes(const FieldChangeProbs& p) noexcept;
double expected_seq_ack_bytes(const FieldChangeProbs& p) noexcept;

/// Throws std::invalid_argument if a triple is negative or does not sum to 1.
void validate(const FieldDeltaModel& model);

/// Field statistics measured on World of Warcraft traces (TCP stack of a
/// Windows 7 client talking to the official servers).
FieldDeltaModel wow_field_model();

/// Model in which W, A and S never change.
FieldDeltaModel static_field_model();

} // namespace tcm
