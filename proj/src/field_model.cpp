#include "tcm/field_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tcm {

double expected_window_bytes(const FieldChangeProbs& p) noexcept
{
    return p.one_byte + kWindowFullBytes * p.full;
}

double expected_seq_ack_bytes(const FieldChangeProbs& p) noexcept
{
    return p.one_byte + kSeqAckFullBytes * p.full;
}

namespace {
void check_triple(const FieldChangeProbs& p, const char* what)
{
    if (p.no_change < 0 || p.one_byte < 0 || p.full < 0)
        throw std::invalid_argument(std::string("negative probability in field model (") + what + ")");
    if (std::abs(p.no_change + p.one_byte + p.full - 1.0) > 1e-9)
        throw std::invalid_argument(std::string("field model probabilities for ") + what +
                                    " do not sum to 1");
}
} // namespace

void validate(const FieldDeltaModel& model)
{
    check_triple(model.c2s.window, "c2s window");
    check_triple(model.c2s.ack, "c2s ack");
    check_triple(model.c2s.seq, "c2s seq");
    check_triple(model.s2c.window, "s2c window");
    check_triple(model.s2c.ack, "s2c ack");
    check_triple(model.s2c.seq, "s2c seq");
}

FieldDeltaModel wow_field_model()
{
    FieldDeltaModel m;
    m.c2s.window = {0.1758, 0.6224, 0.2018};
    m.c2s.ack = {0.1741, 0.5091, 0.3168};
    m.c2s.seq = {0.5947, 0.4053, 0.0};
    m.s2c.window = {1.0, 0.0, 0.0};
    m.s2c.ack = {0.6555, 0.3445, 0.0};
    m.s2c.seq = {0.2056, 0.4838, 0.3106};
    return m;
}

FieldDeltaModel static_field_model()
{
    return {};
}

} // namespace tcm
