#include "tcm/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace tcm {

double bws(const SavingsInput& in)
{
    if (!(in.e_k > 0.0)) throw std::invalid_argument("bws needs E[k] > 0");
    const double native = in.nh + in.e_p;
    if (!(native > 0.0)) throw std::invalid_argument("bws needs NH + E[P] > 0");
    return 1.0 - in.ch / (in.e_k * native) - (in.mh + in.e_rh + in.e_p) / native;
}

double bws_asymptote(double nh, double mh, double e_p, double e_rh)
{
    const double native = nh + e_p;
    if (!(native > 0.0)) throw std::invalid_argument("bws_asymptote needs NH + E[P] > 0");
    return 1.0 - (mh + e_rh + e_p) / native;
}

std::vector<BundleRow> bundle_rows(std::span<const Bundle> bundles)
{
    std::vector<BundleRow> rows;
    rows.reserve(bundles.size());
    for (const auto& b : bundles)
        rows.push_back({b.send_us, static_cast<std::uint32_t>(b.records.size()), b.wire_size, b.cause});
    return rows;
}

std::vector<DelayRow> delay_rows(std::span<const Bundle> bundles)
{
    std::vector<DelayRow> rows;
    for (const auto& b : bundles)
        for (const auto& e : b.records) rows.push_back({e.arrival_us, b.send_us, e.flow_id});
    return rows;
}

RunReport measure_run(std::span<const NativePacket> natives, std::span<const BundleRow> bundles,
                      std::span<const DelayRow> delays, const MuxConfig& cfg, const MeasureOptions& opts)
{
    RunReport r;
    r.period_us = cfg.period_us;
    r.native_packets = natives.size();
    r.bundles = bundles.size();

    std::uint64_t carried = 0;
    for (const auto& b : bundles) {
        carried += b.n_records;
        r.muxed_bytes += b.wire_size;
        if (b.cause == FlushCause::ThresholdReached) ++r.threshold_flushes;
    }
    if (carried != natives.size())
        throw IntegrityError("bundle trace carries " + std::to_string(carried) + " packets, native trace has " +
                             std::to_string(natives.size()));
    if (!delays.empty() && delays.size() != natives.size())
        throw IntegrityError("delay trace has " + std::to_string(delays.size()) + " rows, native trace has " +
                             std::to_string(natives.size()));
    if (natives.empty()) return r;

    r.direction = natives.front().direction;
    std::uint64_t payload = 0;
    std::unordered_map<std::uint32_t, TimeUs> first_seen;
    std::unordered_map<std::uint32_t, TimeUs> last_seen;
    TimeUs t_first = natives.front().arrival_us;
    TimeUs t_last = natives.front().arrival_us;
    for (const auto& p : natives) {
        payload += p.payload_len;
        r.native_bytes += p.wire_size();
        first_seen.emplace(p.flow_id, p.arrival_us);
        last_seen[p.flow_id] = std::max(last_seen[p.flow_id], p.arrival_us);
        t_first = std::min(t_first, p.arrival_us);
        t_last = std::max(t_last, p.arrival_us);
    }
    r.n_players = static_cast<std::uint32_t>(first_seen.size());

    const auto n = static_cast<double>(natives.size());
    const auto nb = static_cast<double>(bundles.size());
    r.measured_e_p = static_cast<double>(payload) / n;
    r.measured_e_k = nb > 0 ? n / nb : 0.0;
    r.measured_e_rh = (static_cast<double>(r.muxed_bytes) - nb * cfg.common_header - n * cfg.muxed_header -
                       static_cast<double>(payload)) /
                      n;
    r.measured_bws = 1.0 - static_cast<double>(r.muxed_bytes) / static_cast<double>(r.native_bytes);
    if (nb > 0) {
        r.analytic_bws = bws({r.measured_e_k, static_cast<double>(kNativeHeaderBytes),
                              static_cast<double>(cfg.common_header), static_cast<double>(cfg.muxed_header),
                              r.measured_e_p, r.measured_e_rh});
        r.reconciliation_error = std::abs(r.measured_bws - r.analytic_bws);
    }

    // pps window: every flow active, warm-up excluded
    TimeUs start = t_first + opts.warmup_us;
    for (const auto& [flow, t] : first_seen) start = std::max(start, t);
    TimeUs end = t_last;
    for (const auto& [flow, t] : last_seen) end = std::min(end, t);
    if (start >= end) {
        start = t_first;
        end = t_last;
    }
    if (end > start) {
        const double seconds = static_cast<double>(end - start) / 1e6;
        const auto in_window = [&](TimeUs t) { return t > start && t <= end; };
        r.native_pps = static_cast<double>(std::ranges::count_if(natives, [&](const auto& p) { return in_window(p.arrival_us); })) / seconds;
        r.muxed_pps = static_cast<double>(std::ranges::count_if(bundles, [&](const auto& b) { return in_window(b.send_us); })) / seconds;
    }

    std::map<TimeUs, std::size_t> gaps;
    for (std::size_t i = 1; i < bundles.size(); ++i) ++gaps[bundles[i].send_us - bundles[i - 1].send_us];
    std::size_t best = 0;
    for (const auto& [gap, count] : gaps)
        if (count > best) {
            best = count;
            r.dominant_gap_us = gap;
        }

    if (!delays.empty()) {
        double sum = 0.0;
        double sum_sq = 0.0;
        TimeUs max_d = 0;
        for (const auto& d : delays) {
            const auto v = static_cast<double>(d.send_us - d.arrival_us);
            sum += v;
            sum_sq += v * v;
            max_d = std::max(max_d, d.send_us - d.arrival_us);
        }
        const double mean = sum / n;
        r.mean_delay_ms = mean / 1000.0;
        r.stdev_delay_ms = std::sqrt(std::max(0.0, sum_sq / n - mean * mean)) / 1000.0;
        r.max_delay_ms = static_cast<double>(max_d) / 1000.0;
    }
    return r;
}

namespace {

RunReport measure_mux(std::span<const NativePacket> natives, const MuxResult& mux, const MuxConfig& cfg,
                      const MeasureOptions& opts)
{
    const auto rows = bundle_rows(mux.bundles);
    const auto delays = delay_rows(mux.bundles);
    return measure_run(natives, rows, delays, cfg, opts);
}

struct PreparedScenario
{
    std::vector<NativePacket> natives;
    std::vector<MuxEntry> entries;
};

PreparedScenario prepare(const SweepSpec& spec, std::uint32_t players, bool parallel)
{
    PreparedScenario s;
    s.natives = parallel ? generate_scenario(spec.profile, spec.direction, players, spec.packets_per_player, spec.seed)
                         : generate_scenario_serial(spec.profile, spec.direction, players, spec.packets_per_player,
                                                    spec.seed);
    Compressor compressor;
    const auto records = parallel ? compress_stream(s.natives, compressor) : compress_stream_serial(s.natives, compressor);
    s.entries = make_entries(s.natives, records);
    return s;
}

void check_grid(const SweepSpec& spec)
{
    if (spec.players.empty() || spec.periods_us.empty()) throw std::invalid_argument("sweep grid is empty");
}

} // namespace

RunArtifacts simulate_run(const GameProfile& profile, Direction dir, std::uint32_t n_players,
                          std::size_t packets_per_player, std::uint64_t seed, const MuxConfig& cfg,
                          const MeasureOptions& opts)
{
    validate(cfg);
    RunArtifacts a;
    a.natives = generate_scenario(profile, dir, n_players, packets_per_player, seed);
    Compressor compressor;
    const auto records = compress_stream(a.natives, compressor);
    a.mux = multiplex(make_entries(a.natives, records), cfg);
    a.report = measure_mux(a.natives, a.mux, cfg, opts);
    return a;
}

std::vector<RunReport> sweep(const SweepSpec& spec)
{
    check_grid(spec);
    std::vector<PreparedScenario> scenarios;
    for (const auto players : spec.players) scenarios.push_back(prepare(spec, players, true));

    const std::size_t n_periods = spec.periods_us.size();
    const auto n_cells = static_cast<std::int64_t>(spec.players.size() * n_periods);
    std::vector<RunReport> out(static_cast<std::size_t>(n_cells));
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < n_cells; ++c) {
        const auto& s = scenarios[static_cast<std::size_t>(c) / n_periods];
        MuxConfig cfg = spec.mux;
        cfg.period_us = spec.periods_us[static_cast<std::size_t>(c) % n_periods];
        out[c] = measure_mux(s.natives, multiplex(s.entries, cfg), cfg, spec.measure);
    }
    return out;
}

std::vector<RunReport> sweep_serial(const SweepSpec& spec)
{
    check_grid(spec);
    std::vector<RunReport> out;
    for (const auto players : spec.players) {
        const auto s = prepare(spec, players, false);
        for (const auto period : spec.periods_us) {
            MuxConfig cfg = spec.mux;
            cfg.period_us = period;
            out.push_back(measure_mux(s.natives, multiplex(s.entries, cfg), cfg, spec.measure));
        }
    }
    return out;
}

} // namespace tcm
