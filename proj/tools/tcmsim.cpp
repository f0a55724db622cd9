#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "tcm/analytics.hpp"
#include "tcm/config.hpp"
#include "tcm/iphc_codec.hpp"
#include "tcm/qoe.hpp"
#include "tcm/trace_io.hpp"

namespace fs = std::filesystem;
using namespace tcm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitOutput = 3;
constexpr int kExitTrace = 4;

struct ExitError
{
    int code;
    std::string message;
};

std::string num(double v, const char* spec = "%.6g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

ToolConfig load_config(const std::string& flag_path, std::string& used)
{
    std::string path = flag_path;
    if (path.empty())
        if (const char* env = std::getenv(kConfigEnvVar)) path = env;
    used = path;
    if (path.empty()) return ToolConfig{};
    try {
        return load_tool_config(path);
    } catch (const std::exception& e) {
        throw ExitError{kExitUsage, e.what()};
    }
}

void prepare_out_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ExitError{kExitOutput, "cannot create output directory " + dir.string()};
}

void emit(const fs::path& path, const std::string& content)
{
    try {
        write_file_atomic(path, content);
    } catch (const std::exception& e) {
        throw ExitError{kExitOutput, "cannot write " + path.string() + ": " + e.what()};
    }
}

std::vector<double> mux_delays_ms(std::span<const DelayRow> rows)
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(double(r.send_us - r.arrival_us) / 1000.0);
    return out;
}

struct QoeResult
{
    DelayMoments total;
    MosEstimate mos;
};

QoeResult evaluate_qoe(const ToolConfig& cfg, const std::string& model_name, double delay_ms, double jitter_ms,
                       std::span<const DelayRow> delays)
{
    std::unique_ptr<QoeModel> model;
    try {
        model = QoeRegistry::with_builtins().create(model_name, cfg.qoe_params);
    } catch (const QoeConfigError& e) {
        throw ExitError{kExitUsage, e.what()};
    }
    DelayProfile profile{delay_ms, jitter_ms, mux_delays_ms(delays)};
    return {combine_delay(profile), estimate(*model, profile)};
}

// ---------------------------------------------------------------- run

struct RunOptions
{
    std::string game = "wow";
    std::string dir = "c2s";
    std::uint32_t players = 1;
    std::optional<std::size_t> packets_per_player;
    std::optional<double> period_ms;
    std::optional<std::uint32_t> threshold;
    std::uint64_t seed = 0;
    std::optional<double> net_delay_ms;
    std::optional<double> net_jitter_ms;
    std::optional<std::string> qoe_model;
    std::optional<double> warmup_s;
    std::string config;
    std::string out = "out";
};

MuxConfig mux_from(const ToolConfig& cfg, std::optional<double> period_ms, std::optional<std::uint32_t> threshold)
{
    MuxConfig mux = cfg.mux;
    if (period_ms) mux.period_us = std::llround(*period_ms * 1000.0);
    if (threshold) mux.size_threshold = *threshold;
    try {
        validate(mux);
    } catch (const std::invalid_argument& e) {
        throw ExitError{kExitUsage, e.what()};
    }
    return mux;
}

Direction direction_arg(const std::string& text)
{
    try {
        return parse_direction(text);
    } catch (const std::exception& e) {
        throw ExitError{kExitUsage, e.what()};
    }
}

const GameProfile& game_arg(const ToolConfig& cfg, const std::string& name)
{
    try {
        return cfg.profile(name);
    } catch (const ConfigError& e) {
        throw ExitError{kExitUsage, e.what()};
    }
}

int cmd_run(const RunOptions& o)
{
    std::string config_path;
    ToolConfig cfg = load_config(o.config, config_path);
    if (o.players == 0) throw ExitError{kExitUsage, "--players must be at least 1"};
    const GameProfile& game = game_arg(cfg, o.game);
    const Direction dir = direction_arg(o.dir);
    const MuxConfig mux = mux_from(cfg, o.period_ms, o.threshold);
    const std::size_t ppp = o.packets_per_player.value_or(cfg.packets_per_player);
    if (ppp == 0) throw ExitError{kExitUsage, "--packets-per-player must be at least 1"};
    const double net_delay = o.net_delay_ms.value_or(cfg.network_delay_ms);
    const double net_jitter = o.net_jitter_ms.value_or(cfg.network_jitter_ms);
    if (net_delay < 0 || net_jitter < 0) throw ExitError{kExitUsage, "network delay and jitter must be non-negative"};
    const std::string qoe_model = o.qoe_model.value_or(cfg.qoe_model);
    MeasureOptions measure = cfg.measure;
    if (o.warmup_s) measure.warmup_us = std::llround(*o.warmup_s * 1e6);

    const fs::path out(o.out);
    prepare_out_dir(out);

    const RunArtifacts run = simulate_run(game, dir, o.players, ppp, o.seed, mux, measure);
    const auto brows = bundle_rows(run.mux.bundles);
    const auto drows = delay_rows(run.mux.bundles);
    const QoeResult q = evaluate_qoe(cfg, qoe_model, net_delay, net_jitter, drows);

    const Provenance prov = {
        {"tool", "tcmsim run"},
        {"game", game.name},
        {"dir", std::string(to_string(dir))},
        {"players", std::to_string(o.players)},
        {"packets_per_player", std::to_string(ppp)},
        {"seed", std::to_string(o.seed)},
        {"period_us", std::to_string(mux.period_us)},
        {"threshold", std::to_string(mux.size_threshold)},
        {"common_header", std::to_string(mux.common_header)},
        {"muxed_header", std::to_string(mux.muxed_header)},
        {"mtu", std::to_string(mux.mtu)},
        {"warmup_us", std::to_string(measure.warmup_us)},
        {"net_delay_ms", num(net_delay)},
        {"net_jitter_ms", num(net_jitter)},
        {"qoe_model", qoe_model},
        {"config", config_path.empty() ? "builtin" : config_path},
    };

    std::ostringstream native, bundles, delays, summary;
    write_native_trace(native, run.natives, prov);
    write_bundle_trace(bundles, brows, prov);
    write_delay_trace(delays, drows, prov);
    for (const auto& [k, v] : prov) summary << "# " << k << '=' << v << '\n';
    const RunReport& r = run.report;
    summary << kSummaryHeader << '\n'
            << sweep_row(r) << ',' << num(r.measured_e_p, "%.4f") << ',' << num(r.measured_e_rh, "%.4f") << ','
            << num(q.total.stdev_ms, "%.4f") << ',' << num(q.mos.mos, "%.4f") << ',' << (q.mos.acceptable ? 1 : 0)
            << '\n';

    emit(out / "native.csv", native.str());
    emit(out / "bundles.csv", bundles.str());
    emit(out / "delays.csv", delays.str());
    emit(out / "summary.csv", summary.str());

    std::cout << "players " << r.n_players << ", period " << num(double(r.period_us) / 1000.0) << " ms, "
              << to_string(dir) << '\n'
              << "native " << r.native_packets << " pkts " << num(r.native_pps, "%.2f") << " pps, mux " << r.bundles
              << " bundles " << num(r.muxed_pps, "%.2f") << " pps, E[k] " << num(r.measured_e_k, "%.2f") << '\n'
              << "BWS measured " << num(r.measured_bws, "%.4f") << " analytic " << num(r.analytic_bws, "%.4f")
              << '\n'
              << "MOS " << num(q.mos.mos, "%.3f") << (q.mos.acceptable ? " acceptable" : " not acceptable") << '\n'
              << "wrote " << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions
{
    std::string game = "wow";
    std::string dir = "c2s";
    std::vector<std::uint32_t> players;
    std::vector<double> periods_ms;
    std::optional<std::size_t> packets_per_player;
    std::optional<std::uint32_t> threshold;
    std::uint64_t seed = 0;
    std::optional<double> warmup_s;
    std::string config;
    std::string out = "out";
};

int cmd_sweep(const SweepOptions& o)
{
    std::string config_path;
    ToolConfig cfg = load_config(o.config, config_path);
    if (o.players.empty() || o.periods_ms.empty()) throw ExitError{kExitUsage, "sweep grid is empty"};
    for (auto p : o.players)
        if (p == 0) throw ExitError{kExitUsage, "player counts must be at least 1"};

    SweepSpec spec;
    spec.profile = game_arg(cfg, o.game);
    spec.direction = direction_arg(o.dir);
    spec.players = o.players;
    spec.mux = mux_from(cfg, std::nullopt, o.threshold);
    for (double pe : o.periods_ms) {
        if (!(pe > 0)) throw ExitError{kExitUsage, "periods must be positive"};
        spec.periods_us.push_back(std::llround(pe * 1000.0));
    }
    spec.packets_per_player = o.packets_per_player.value_or(cfg.packets_per_player);
    if (spec.packets_per_player == 0) throw ExitError{kExitUsage, "--packets-per-player must be at least 1"};
    spec.seed = o.seed;
    spec.measure = cfg.measure;
    if (o.warmup_s) spec.measure.warmup_us = std::llround(*o.warmup_s * 1e6);

    const fs::path out(o.out);
    prepare_out_dir(out);
    const auto reports = sweep(spec);

    const Provenance prov = {
        {"tool", "tcmsim sweep"},
        {"game", spec.profile.name},
        {"dir", std::string(to_string(spec.direction))},
        {"packets_per_player", std::to_string(spec.packets_per_player)},
        {"seed", std::to_string(spec.seed)},
        {"threshold", std::to_string(spec.mux.size_threshold)},
        {"warmup_us", std::to_string(spec.measure.warmup_us)},
        {"config", config_path.empty() ? "builtin" : config_path},
    };
    std::ostringstream csv;
    write_sweep_csv(csv, reports, prov);
    emit(out / "sweep.csv", csv.str());
    std::cout << "wrote " << reports.size() << " rows to " << (out / "sweep.csv").string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- report

template <class Reader>
auto read_trace(const fs::path& path, Provenance* prov, Reader reader)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ExitError{kExitTrace, "missing trace " + path.string()};
    try {
        return reader(in, prov);
    } catch (const std::exception& e) {
        throw ExitError{kExitTrace, path.string() + ": " + e.what()};
    }
}

template <class T>
T prov_number(const Provenance& prov, const std::string& key, T fallback)
{
    const std::string v = lookup(prov, key);
    if (v.empty()) return fallback;
    std::istringstream is(v);
    T out{};
    if (!(is >> out)) throw ExitError{kExitTrace, "bad provenance value for " + key};
    return out;
}

void print_asymptotes(const ToolConfig& cfg)
{
    std::cout << "Maximum bandwidth saving (E[k] -> infinity)\n";
    std::printf("  %-10s %-4s %9s %10s %12s %9s\n", "game", "dir", "E[P]", "E[RH] ref", "E[RH] model", "saving");
    for (const auto& g : cfg.profiles)
        for (const Direction d : kDirections) {
            const double ep = g.at(d).expected_payload;
            const double ref = d == Direction::ClientToServer ? cfg.reference_e_rh_c2s : cfg.reference_e_rh_s2c;
            const double model = expected_reduced_header(g.fields, d);
            const double s = bws_asymptote(kNativeHeaderBytes, cfg.mux.muxed_header, ep, ref);
            std::printf("  %-10s %-4s %9.2f %10.2f %12.4f %8.2f %%\n", g.name.c_str(),
                        std::string(to_string(d)).c_str(), ep, ref, model, 100.0 * s);
        }
}

int cmd_report(const std::string& in_dir, const std::string& config)
{
    std::string config_path;
    ToolConfig cfg = load_config(config, config_path);
    const fs::path dir(in_dir);
    Provenance prov;
    const auto natives = read_trace(dir / "native.csv", nullptr, read_native_trace);
    const auto bundles = read_trace(dir / "bundles.csv", &prov, read_bundle_trace);
    const auto delays = read_trace(dir / "delays.csv", nullptr, read_delay_trace);

    MuxConfig mux = cfg.mux;
    mux.period_us = prov_number<TimeUs>(prov, "period_us", mux.period_us);
    mux.size_threshold = prov_number<std::uint32_t>(prov, "threshold", mux.size_threshold);
    mux.common_header = prov_number<std::uint32_t>(prov, "common_header", mux.common_header);
    mux.muxed_header = prov_number<std::uint32_t>(prov, "muxed_header", mux.muxed_header);
    mux.mtu = prov_number<std::uint32_t>(prov, "mtu", mux.mtu);
    MeasureOptions measure = cfg.measure;
    measure.warmup_us = prov_number<TimeUs>(prov, "warmup_us", measure.warmup_us);

    RunReport r;
    try {
        r = measure_run(natives, bundles, delays, mux, measure);
    } catch (const std::exception& e) {
        throw ExitError{kExitTrace, e.what()};
    }
    const double net_delay = prov_number<double>(prov, "net_delay_ms", cfg.network_delay_ms);
    const double net_jitter = prov_number<double>(prov, "net_jitter_ms", cfg.network_jitter_ms);
    const std::string model = lookup(prov, "qoe_model", cfg.qoe_model);
    const QoeResult q = evaluate_qoe(cfg, model, net_delay, net_jitter, delays);

    print_asymptotes(cfg);
    std::cout << "\nRun " << dir.string() << '\n';
    std::printf("  game %s, %s, %u players, period %s ms, threshold %u B\n", lookup(prov, "game", "?").c_str(),
                std::string(to_string(r.direction)).c_str(), r.n_players, num(double(mux.period_us) / 1000.0).c_str(),
                mux.size_threshold);
    std::printf("  native   %10llu pkts %12llu B %10.2f pps\n", (unsigned long long)r.native_packets,
                (unsigned long long)r.native_bytes, r.native_pps);
    std::printf("  muxed    %10llu bndl %12llu B %10.2f pps (%llu threshold flushes)\n",
                (unsigned long long)r.bundles, (unsigned long long)r.muxed_bytes, r.muxed_pps,
                (unsigned long long)r.threshold_flushes);
    std::printf("  E[k] %.3f  E[P] %.3f  E[RH] %.3f\n", r.measured_e_k, r.measured_e_p, r.measured_e_rh);
    std::printf("  BWS measured %.4f  analytic %.4f  |diff| %.2e\n", r.measured_bws, r.analytic_bws,
                r.reconciliation_error);
    std::printf("  added delay mean %.2f ms  stdev %.2f ms  max %.2f ms\n", r.mean_delay_ms, r.stdev_delay_ms,
                r.max_delay_ms);
    std::printf("\nQoE (%s): network %s/%s ms, total %.2f ms, jitter %.2f ms, MOS %.3f -> %s\n", model.c_str(),
                num(net_delay).c_str(), num(net_jitter).c_str(), q.total.mean_ms, q.total.stdev_ms, q.mos.mos,
                q.mos.acceptable ? "acceptable" : "NOT acceptable");
    return 0;
}

// ---------------------------------------------------------------- profiles

int cmd_profiles_list(const std::string& config)
{
    std::string used;
    const ToolConfig cfg = load_config(config, used);
    for (const auto& g : cfg.profiles)
        std::printf("%-10s c2s %.2f B @ %.2f pps   s2c %.2f B @ %.2f pps\n", g.name.c_str(), g.c2s.expected_payload,
                    g.c2s.packet_rate, g.s2c.expected_payload, g.s2c.packet_rate);
    return 0;
}

int cmd_profiles_show(const std::string& name, const std::string& config)
{
    std::string used;
    const ToolConfig cfg = load_config(config, used);
    std::cout << profile_to_json(game_arg(cfg, name)) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"TCM simulator: tunnel, compress and multiplex game traffic"};
    app.require_subcommand(1);
    std::string config;
    app.add_option("--config", config, "tool configuration file (default: $TCMSIM_CONFIG)");

    RunOptions ro;
    auto* run = app.add_subcommand("run", "simulate one scenario and write traces");
    run->add_option("--game", ro.game, "profile name")->capture_default_str();
    run->add_option("--dir", ro.dir, "c2s or s2c")->capture_default_str();
    run->add_option("--players", ro.players, "number of players")->capture_default_str();
    run->add_option("--packets-per-player", ro.packets_per_player, "packets generated per player");
    run->add_option("--period-ms", ro.period_ms, "multiplexing period");
    run->add_option("--threshold", ro.threshold, "bundle size threshold in bytes");
    run->add_option("--seed", ro.seed, "scenario seed")->required();
    run->add_option("--net-delay-ms", ro.net_delay_ms, "mean network delay");
    run->add_option("--net-jitter-ms", ro.net_jitter_ms, "network delay standard deviation");
    run->add_option("--qoe-model", ro.qoe_model, "registered QoE model");
    run->add_option("--warmup-s", ro.warmup_s, "simulated time skipped by the pps counters");
    run->add_option("--config", ro.config, "tool configuration file");
    run->add_option("--out", ro.out, "output directory")->capture_default_str();

    SweepOptions so;
    auto* sw = app.add_subcommand("sweep", "grid of runs over players and periods");
    sw->add_option("--game", so.game, "profile name")->capture_default_str();
    sw->add_option("--dir", so.dir, "c2s or s2c")->capture_default_str();
    sw->add_option("--players", so.players, "player counts")->delimiter(',')->required();
    sw->add_option("--periods-ms", so.periods_ms, "multiplexing periods")->delimiter(',')->required();
    sw->add_option("--packets-per-player", so.packets_per_player, "packets generated per player");
    sw->add_option("--threshold", so.threshold, "bundle size threshold in bytes");
    sw->add_option("--seed", so.seed, "scenario seed")->required();
    sw->add_option("--warmup-s", so.warmup_s, "simulated time skipped by the pps counters");
    sw->add_option("--config", so.config, "tool configuration file");
    sw->add_option("--out", so.out, "output directory")->capture_default_str();

    std::string report_in;
    std::string report_config;
    auto* rep = app.add_subcommand("report", "summarize the traces of a run");
    rep->add_option("--in", report_in, "directory written by run")->required();
    rep->add_option("--config", report_config, "tool configuration file");

    auto* prof = app.add_subcommand("profiles", "inspect game profiles");
    prof->require_subcommand(1);
    auto* plist = prof->add_subcommand("list", "list configured profiles");
    std::string show_name;
    auto* pshow = prof->add_subcommand("show", "print a profile as JSON");
    pshow->add_option("name", show_name, "profile name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    auto pick = [&config](const std::string& local) { return local.empty() ? config : local; };
    try {
        if (*run) {
            ro.config = pick(ro.config);
            return cmd_run(ro);
        }
        if (*sw) {
            so.config = pick(so.config);
            return cmd_sweep(so);
        }
        if (*rep) return cmd_report(report_in, pick(report_config));
        if (*plist) return cmd_profiles_list(config);
        if (*pshow) return cmd_profiles_show(show_name, config);
    } catch (const ExitError& e) {
        std::cerr << "tcmsim: " << e.message << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "tcmsim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
