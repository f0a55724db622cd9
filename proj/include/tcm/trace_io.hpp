#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcm/analytics.hpp"
#include "tcm/packet.hpp"

namespace tcm {

inline constexpr const char* kNativeTraceHeader = "t_us,flow,dir,payload,seq,ack,window,ipid,push";
inline constexpr const char* kBundleTraceHeader = "send_t_us,n_records,wire_size,cause";
inline constexpr const char* kDelayTraceHeader = "t_arrival_us,t_send_us,flow";
inline constexpr const char* kSweepHeader =
    "players,period_ms,direction,bws_measured,bws_analytic,native_pps,mux_pps,e_k,mean_delay_ms,max_delay_ms";
inline constexpr const char* kSummaryHeader =
    "players,period_ms,direction,bws_measured,bws_analytic,native_pps,mux_pps,e_k,mean_delay_ms,max_delay_ms,"
    "e_p,e_rh,jitter_ms,mos,acceptable";

/// Header row missing or wrong, or a row that does not parse.
class TraceFormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Ordered key/value pairs written as "# key=value" lines above the header.
using Provenance = std::vector<std::pair<std::string, std::string>>;

std::string lookup(const Provenance& prov, const std::string& key, const std::string& fallback = "");

void write_native_trace(std::ostream& out, std::span<const NativePacket> packets, const Provenance& prov = {});
std::vector<NativePacket> read_native_trace(std::istream& in, Provenance* prov = nullptr);

void write_bundle_trace(std::ostream& out, std::span<const BundleRow> rows, const Provenance& prov = {});
std::vector<BundleRow> read_bundle_trace(std::istream& in, Provenance* prov = nullptr);

void write_delay_trace(std::ostream& out, std::span<const DelayRow> rows, const Provenance& prov = {});
std::vector<DelayRow> read_delay_trace(std::istream& in, Provenance* prov = nullptr);

/// Row of the sweep table (also the first ten columns of the run summary).
std::string sweep_row(const RunReport& r);
void write_sweep_csv(std::ostream& out, std::span<const RunReport> reports, const Provenance& prov = {});

/// Parsed sweep CSV, used to validate emitted files.
struct SweepRow
{
    std::uint32_t players = 0;
    double period_ms = 0;
    Direction direction = Direction::ClientToServer;
    double bws_measured = 0;
    double bws_analytic = 0;
    double native_pps = 0;
    double mux_pps = 0;
    double e_k = 0;
    double mean_delay_ms = 0;
    double max_delay_ms = 0;
};
std::vector<SweepRow> read_sweep_csv(std::istream& in, Provenance* prov = nullptr);

/// Writes to a temporary sibling and renames it over the target.
/// Throws std::filesystem::filesystem_error on failure.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace tcm
