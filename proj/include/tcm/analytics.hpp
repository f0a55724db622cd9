#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tcm/packet.hpp"
#include "tcm/tcm_mux.hpp"
#include "tcm/traffic_model.hpp"

namespace tcm {

struct SavingsInput
{
    /// Mean native packets per bundle.
    double e_k = 1.0;
    double nh = kNativeHeaderBytes;
    double ch = 25.0;
    double mh = 2.0;
    /// Mean payload, pure ACKs included as 0.
    double e_p = 0.0;
    /// Mean compressed header.
    double e_rh = 0.0;
};

/// Bandwidth saving 1 - bytes_mux / bytes_native for E[k] packets sharing
/// one tunnel header. Negative when the tunnel overhead dominates.
double bws(const SavingsInput& in);

/// Limit of bws as E[k] grows without bound.
double bws_asymptote(double nh, double mh, double e_p, double e_rh);

class IntegrityError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// One row of the bundle trace.
struct BundleRow
{
    TimeUs send_us = 0;
    std::uint32_t n_records = 0;
    std::uint32_t wire_size = 0;
    FlushCause cause = FlushCause::PeriodEnd;
    bool operator==(const BundleRow&) const = default;
};

/// One row of the per-packet delay trace.
struct DelayRow
{
    TimeUs arrival_us = 0;
    TimeUs send_us = 0;
    std::uint32_t flow = 0;
    bool operator==(const DelayRow&) const = default;
};

std::vector<BundleRow> bundle_rows(std::span<const Bundle> bundles);
std::vector<DelayRow> delay_rows(std::span<const Bundle> bundles);

struct MeasureOptions
{
    /// pps counters skip this much simulated time after the first packet.
    TimeUs warmup_us = 1'000'000;
};

struct RunReport
{
    std::uint32_t n_players = 0;
    TimeUs period_us = 0;
    Direction direction = Direction::ClientToServer;

    std::uint64_t native_packets = 0;
    std::uint64_t bundles = 0;
    std::uint64_t threshold_flushes = 0;
    std::uint64_t native_bytes = 0;
    std::uint64_t muxed_bytes = 0;
    double native_pps = 0.0;
    double muxed_pps = 0.0;

    double measured_e_k = 0.0;
    double measured_e_p = 0.0;
    double measured_e_rh = 0.0;
    double measured_bws = 0.0;
    /// bws() evaluated at the measured E[k], E[P], E[RH].
    double analytic_bws = 0.0;
    double reconciliation_error = 0.0;

    double mean_delay_ms = 0.0;
    double stdev_delay_ms = 0.0;
    double max_delay_ms = 0.0;
    /// Most frequent gap between consecutive bundle send times.
    TimeUs dominant_gap_us = 0;
};

/// Recomputes every counter from the traces alone. Throws IntegrityError
/// when the bundle trace does not account for every native packet.
RunReport measure_run(std::span<const NativePacket> natives, std::span<const BundleRow> bundles,
                      std::span<const DelayRow> delays, const MuxConfig& cfg, const MeasureOptions& opts = {});

/// Everything produced by one end-to-end simulation.
struct RunArtifacts
{
    std::vector<NativePacket> natives;
    MuxResult mux;
    RunReport report;
};

/// generate_scenario -> compress_stream -> multiplex -> measure_run.
RunArtifacts simulate_run(const GameProfile& profile, Direction dir, std::uint32_t n_players,
                          std::size_t packets_per_player, std::uint64_t seed, const MuxConfig& cfg,
                          const MeasureOptions& opts = {});

struct SweepSpec
{
    GameProfile profile;
    Direction direction = Direction::ClientToServer;
    std::vector<std::uint32_t> players;
    std::vector<TimeUs> periods_us;
    std::size_t packets_per_player = 5000;
    std::uint64_t seed = 1;
    /// period_us is overwritten per cell.
    MuxConfig mux;
    MeasureOptions measure;
};

/// Grid of reports in row-major order (players outer, periods inner).
/// Each player count's scenario is generated once and shared by all
/// periods; cells are evaluated in parallel.
std::vector<RunReport> sweep(const SweepSpec& spec);

/// Single-threaded reference for sweep; output is identical.
std::vector<RunReport> sweep_serial(const SweepSpec& spec);

} // namespace tcm
