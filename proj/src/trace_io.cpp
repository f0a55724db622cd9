#include "tcm/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

namespace tcm {

namespace {

void write_provenance(std::ostream& out, const Provenance& prov)
{
    for (const auto& [key, value] : prov) out << "# " << key << '=' << value << '\n';
}

/// Consumes comment lines and the header row; returns the first data line
/// number for diagnostics.
std::size_t read_preamble(std::istream& in, const char* expected, Provenance* prov)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') throw TraceFormatError("CRLF line endings are not allowed");
        if (line.rfind("# ", 0) == 0) {
            if (prov) {
                const auto eq = line.find('=');
                if (eq == std::string::npos) throw TraceFormatError("malformed comment line " + std::to_string(line_no));
                prov->emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            }
            continue;
        }
        if (line != expected)
            throw TraceFormatError("expected header '" + std::string(expected) + "', found '" + line + "'");
        return line_no;
    }
    throw TraceFormatError("missing header row '" + std::string(expected) + "'");
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T to_number(std::string_view field, std::size_t line_no)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw TraceFormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
    return value;
}

template <typename Row, typename Parse>
std::vector<Row> read_rows(std::istream& in, const char* header, std::size_t n_fields, Provenance* prov, Parse parse)
{
    std::size_t line_no = read_preamble(in, header, prov);
    std::vector<Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split(line);
        if (fields.size() != n_fields)
            throw TraceFormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(n_fields) +
                                   " fields, got " + std::to_string(fields.size()));
        try {
            rows.push_back(parse(fields, line_no));
        } catch (const std::invalid_argument& e) {
            throw TraceFormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string period_ms_text(TimeUs period_us)
{
    if (period_us % 1000 == 0) return std::to_string(period_us / 1000);
    return fmt("%.3f", static_cast<double>(period_us) / 1000.0);
}

} // namespace

std::string lookup(const Provenance& prov, const std::string& key, const std::string& fallback)
{
    for (const auto& [k, v] : prov)
        if (k == key) return v;
    return fallback;
}

void write_native_trace(std::ostream& out, std::span<const NativePacket> packets, const Provenance& prov)
{
    write_provenance(out, prov);
    out << kNativeTraceHeader << '\n';
    for (const auto& p : packets)
        out << p.arrival_us << ',' << p.flow_id << ',' << to_string(p.direction) << ',' << p.payload_len << ','
            << p.seq << ',' << p.ack << ',' << p.window << ',' << p.ipid << ',' << (p.push ? 1 : 0) << '\n';
}

std::vector<NativePacket> read_native_trace(std::istream& in, Provenance* prov)
{
    return read_rows<NativePacket>(in, kNativeTraceHeader, 9, prov, [](const auto& f, std::size_t ln) {
        NativePacket p;
        p.arrival_us = to_number<TimeUs>(f[0], ln);
        p.flow_id = to_number<std::uint32_t>(f[1], ln);
        p.direction = parse_direction(f[2]);
        p.payload_len = to_number<std::uint32_t>(f[3], ln);
        p.seq = to_number<std::uint32_t>(f[4], ln);
        p.ack = to_number<std::uint32_t>(f[5], ln);
        p.window = to_number<std::uint16_t>(f[6], ln);
        p.ipid = to_number<std::uint16_t>(f[7], ln);
        const auto push = to_number<int>(f[8], ln);
        if (push != 0 && push != 1) throw TraceFormatError("line " + std::to_string(ln) + ": push must be 0 or 1");
        p.push = push == 1;
        return p;
    });
}

void write_bundle_trace(std::ostream& out, std::span<const BundleRow> rows, const Provenance& prov)
{
    write_provenance(out, prov);
    out << kBundleTraceHeader << '\n';
    for (const auto& r : rows)
        out << r.send_us << ',' << r.n_records << ',' << r.wire_size << ',' << to_string(r.cause) << '\n';
}

std::vector<BundleRow> read_bundle_trace(std::istream& in, Provenance* prov)
{
    return read_rows<BundleRow>(in, kBundleTraceHeader, 4, prov, [](const auto& f, std::size_t ln) {
        return BundleRow{to_number<TimeUs>(f[0], ln), to_number<std::uint32_t>(f[1], ln),
                         to_number<std::uint32_t>(f[2], ln), parse_flush_cause(f[3])};
    });
}

void write_delay_trace(std::ostream& out, std::span<const DelayRow> rows, const Provenance& prov)
{
    write_provenance(out, prov);
    out << kDelayTraceHeader << '\n';
    for (const auto& r : rows) out << r.arrival_us << ',' << r.send_us << ',' << r.flow << '\n';
}

std::vector<DelayRow> read_delay_trace(std::istream& in, Provenance* prov)
{
    return read_rows<DelayRow>(in, kDelayTraceHeader, 3, prov, [](const auto& f, std::size_t ln) {
        return DelayRow{to_number<TimeUs>(f[0], ln), to_number<TimeUs>(f[1], ln), to_number<std::uint32_t>(f[2], ln)};
    });
}

std::string sweep_row(const RunReport& r)
{
    std::string row = std::to_string(r.n_players) + ',' + period_ms_text(r.period_us) + ',' +
                      std::string(to_string(r.direction));
    for (const double v : {r.measured_bws, r.analytic_bws}) row += ',' + fmt("%.6f", v);
    for (const double v : {r.native_pps, r.muxed_pps, r.measured_e_k, r.mean_delay_ms, r.max_delay_ms})
        row += ',' + fmt("%.4f", v);
    return row;
}

void write_sweep_csv(std::ostream& out, std::span<const RunReport> reports, const Provenance& prov)
{
    write_provenance(out, prov);
    out << kSweepHeader << '\n';
    for (const auto& r : reports) out << sweep_row(r) << '\n';
}

std::vector<SweepRow> read_sweep_csv(std::istream& in, Provenance* prov)
{
    return read_rows<SweepRow>(in, kSweepHeader, 10, prov, [](const auto& f, std::size_t ln) {
        SweepRow r;
        r.players = to_number<std::uint32_t>(f[0], ln);
        r.period_ms = to_number<double>(f[1], ln);
        r.direction = parse_direction(f[2]);
        r.bws_measured = to_number<double>(f[3], ln);
        r.bws_analytic = to_number<double>(f[4], ln);
        r.native_pps = to_number<double>(f[5], ln);
        r.mux_pps = to_number<double>(f[6], ln);
        r.e_k = to_number<double>(f[7], ln);
        r.mean_delay_ms = to_number<double>(f[8], ln);
        r.max_delay_ms = to_number<double>(f[9], ln);
        return r;
    });
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::filesystem::filesystem_error("cannot open for writing", tmp,
                                                    std::make_error_code(std::errc::permission_denied));
        out << content;
        out.flush();
        if (!out)
            throw std::filesystem::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
    }
    std::filesystem::rename(tmp, path);
}

} // namespace tcm
