#include "tcm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tcm {

using nlohmann::json;

namespace {

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!keys.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

const json& require(const json& obj, const char* key, const std::string& where)
{
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + ": missing key '" + key + "'");
    return *it;
}

double number(const json& v, const std::string& where)
{
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

std::uint32_t count(const json& v, const std::string& where)
{
    if (!v.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
    return v.get<std::uint32_t>();
}

FieldChangeProbs triple_from(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 3) throw ConfigError(where + ": expected [no_change, one_byte, full]");
    return {number(v[0], where), number(v[1], where), number(v[2], where)};
}

json triple_to(const FieldChangeProbs& p)
{
    return json::array({p.no_change, p.one_byte, p.full});
}

DirectionFieldModel fields_from(const json& v, const std::string& where)
{
    only_keys(v, {"window", "ack", "seq"}, where);
    return {triple_from(require(v, "window", where), where + ".window"),
            triple_from(require(v, "ack", where), where + ".ack"),
            triple_from(require(v, "seq", where), where + ".seq")};
}

json fields_to(const DirectionFieldModel& m)
{
    return {{"window", triple_to(m.window)}, {"ack", triple_to(m.ack)}, {"seq", triple_to(m.seq)}};
}

ApduSizeDist sizes_from(const json& v, const std::string& where)
{
    only_keys(v, {"table", "weibull"}, where);
    if (v.size() != 1) throw ConfigError(where + ": give exactly one of 'table' or 'weibull'");
    if (v.contains("table")) {
        DiscreteSizes t;
        const json& rows = v["table"];
        if (!rows.is_array()) throw ConfigError(where + ".table: expected an array");
        for (const auto& row : rows) {
            if (!row.is_array() || row.size() != 2) throw ConfigError(where + ".table: expected [bytes, probability]");
            t.entries.emplace_back(count(row[0], where + ".table"), number(row[1], where + ".table"));
        }
        return t;
    }
    const json& w = v["weibull"];
    only_keys(w, {"shape", "scale"}, where + ".weibull");
    return WeibullSizes{number(require(w, "shape", where), where + ".weibull.shape"),
                        number(require(w, "scale", where), where + ".weibull.scale")};
}

json sizes_to(const ApduSizeDist& d)
{
    if (const auto* t = std::get_if<DiscreteSizes>(&d)) {
        json rows = json::array();
        for (const auto& [bytes, prob] : t->entries) rows.push_back(json::array({bytes, prob}));
        return {{"table", rows}};
    }
    const auto& w = std::get<WeibullSizes>(d);
    return {{"weibull", {{"shape", w.shape}, {"scale", w.scale}}}};
}

DirectionProfile direction_from(const json& v, const std::string& where, DirectionFieldModel& fields)
{
    only_keys(v, {"expected_payload", "packet_rate", "ack_ratio", "apdu_sizes", "interpacket", "fields"}, where);
    DirectionProfile dp;
    dp.expected_payload = number(require(v, "expected_payload", where), where + ".expected_payload");
    dp.packet_rate = number(require(v, "packet_rate", where), where + ".packet_rate");
    dp.ack_ratio = number(require(v, "ack_ratio", where), where + ".ack_ratio");
    dp.apdu_sizes = sizes_from(require(v, "apdu_sizes", where), where + ".apdu_sizes");
    const json& mix = require(v, "interpacket", where);
    if (!mix.is_array()) throw ConfigError(where + ".interpacket: expected an array");
    for (const auto& c : mix) {
        only_keys(c, {"lo_s", "hi_s", "weight"}, where + ".interpacket");
        dp.interpacket.push_back({number(require(c, "lo_s", where), where + ".interpacket.lo_s"),
                                  number(require(c, "hi_s", where), where + ".interpacket.hi_s"),
                                  number(require(c, "weight", where), where + ".interpacket.weight")});
    }
    fields = fields_from(require(v, "fields", where), where + ".fields");
    return dp;
}

json direction_to(const DirectionProfile& dp, const DirectionFieldModel& fields)
{
    json mix = json::array();
    for (const auto& c : dp.interpacket) mix.push_back({{"lo_s", c.lo_s}, {"hi_s", c.hi_s}, {"weight", c.weight}});
    return {{"expected_payload", dp.expected_payload},
            {"packet_rate", dp.packet_rate},
            {"ack_ratio", dp.ack_ratio},
            {"apdu_sizes", sizes_to(dp.apdu_sizes)},
            {"interpacket", mix},
            {"fields", fields_to(fields)}};
}

GameProfile profile_from(const json& doc)
{
    only_keys(doc, {"name", "mtu", "mss", "c2s", "s2c"}, "profile");
    GameProfile g;
    const json& name = require(doc, "name", "profile");
    if (!name.is_string()) throw ConfigError("profile.name: expected a string");
    g.name = name.get<std::string>();
    const std::string where = "profile '" + g.name + "'";
    if (doc.contains("mtu")) g.mtu = count(doc["mtu"], where + ".mtu");
    if (doc.contains("mss")) g.mss = count(doc["mss"], where + ".mss");
    g.c2s = direction_from(require(doc, "c2s", where), where + ".c2s", g.fields.c2s);
    g.s2c = direction_from(require(doc, "s2c", where), where + ".s2c", g.fields.s2c);
    try {
        validate(g);
    } catch (const ProfileError& e) {
        throw ConfigError(e.what());
    }
    return g;
}

json parse(const std::string& text, const std::string& where)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

GameProfile profile_from_json(const std::string& text)
{
    return profile_from(parse(text, "profile"));
}

std::string profile_to_json(const GameProfile& g)
{
    const json doc = {{"name", g.name},
                      {"mtu", g.mtu},
                      {"mss", g.mss},
                      {"c2s", direction_to(g.c2s, g.fields.c2s)},
                      {"s2c", direction_to(g.s2c, g.fields.s2c)}};
    return doc.dump(2) + "\n";
}

GameProfile load_profile_file(const std::filesystem::path& path)
{
    return profile_from_json(read_file(path));
}

FieldDeltaModel field_model_from_json(const std::string& text)
{
    const json doc = parse(text, "field model");
    if (doc.is_object() && doc.contains("name")) return profile_from(doc).fields;
    only_keys(doc, {"c2s", "s2c"}, "field model");
    FieldDeltaModel m;
    for (const Direction dir : kDirections) {
        const std::string where = "field model." + std::string(to_string(dir));
        const json& side = require(doc, to_string(dir).data(), "field model");
        only_keys(side, {"fields"}, where);
        m.at(dir) = fields_from(require(side, "fields", where), where + ".fields");
    }
    try {
        validate(m);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return m;
}

const GameProfile& ToolConfig::profile(const std::string& name) const
{
    for (const auto& p : profiles)
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : profiles) known += (known.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown game '" + name + "' (known: " + known + ")");
}

ToolConfig load_tool_config(const std::filesystem::path& path)
{
    const json doc = parse(read_file(path), path.string());
    only_keys(doc, {"profiles", "profile_files", "mux", "network", "qoe", "analysis", "run"}, "config");
    ToolConfig cfg;

    auto install = [&cfg](GameProfile g) {
        for (auto& existing : cfg.profiles)
            if (existing.name == g.name) {
                existing = std::move(g);
                return;
            }
        cfg.profiles.push_back(std::move(g));
    };
    if (doc.contains("profiles")) {
        if (!doc["profiles"].is_array()) throw ConfigError("config.profiles: expected an array");
        for (const auto& p : doc["profiles"]) install(profile_from(p));
    }
    if (doc.contains("profile_files")) {
        if (!doc["profile_files"].is_array()) throw ConfigError("config.profile_files: expected an array");
        for (const auto& f : doc["profile_files"]) {
            if (!f.is_string()) throw ConfigError("config.profile_files: expected file names");
            std::filesystem::path p = f.get<std::string>();
            if (p.is_relative()) p = path.parent_path() / p;
            install(load_profile_file(p));
        }
    }
    if (doc.contains("mux")) {
        const json& m = doc["mux"];
        only_keys(m, {"period_ms", "threshold", "common_header", "muxed_header", "mtu"}, "config.mux");
        if (m.contains("period_ms")) cfg.mux.period_us = std::llround(number(m["period_ms"], "config.mux.period_ms") * 1000.0);
        if (m.contains("threshold")) cfg.mux.size_threshold = count(m["threshold"], "config.mux.threshold");
        if (m.contains("common_header")) cfg.mux.common_header = count(m["common_header"], "config.mux.common_header");
        if (m.contains("muxed_header")) cfg.mux.muxed_header = count(m["muxed_header"], "config.mux.muxed_header");
        if (m.contains("mtu")) cfg.mux.mtu = count(m["mtu"], "config.mux.mtu");
        try {
            validate(cfg.mux);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.mux: ") + e.what());
        }
    }
    if (doc.contains("network")) {
        const json& n = doc["network"];
        only_keys(n, {"delay_ms", "jitter_ms"}, "config.network");
        if (n.contains("delay_ms")) cfg.network_delay_ms = number(n["delay_ms"], "config.network.delay_ms");
        if (n.contains("jitter_ms")) cfg.network_jitter_ms = number(n["jitter_ms"], "config.network.jitter_ms");
    }
    if (doc.contains("qoe")) {
        const json& q = doc["qoe"];
        only_keys(q, {"model", "params"}, "config.qoe");
        if (q.contains("model")) {
            if (!q["model"].is_string()) throw ConfigError("config.qoe.model: expected a string");
            cfg.qoe_model = q["model"].get<std::string>();
        }
        if (q.contains("params")) {
            if (!q["params"].is_object()) throw ConfigError("config.qoe.params: expected an object");
            for (const auto& [key, value] : q["params"].items())
                cfg.qoe_params[key] = number(value, "config.qoe.params." + key);
        }
    }
    if (doc.contains("analysis")) {
        const json& a = doc["analysis"];
        only_keys(a, {"warmup_s", "reference_reduced_header"}, "config.analysis");
        if (a.contains("warmup_s"))
            cfg.measure.warmup_us = std::llround(number(a["warmup_s"], "config.analysis.warmup_s") * 1e6);
        if (a.contains("reference_reduced_header")) {
            const json& r = a["reference_reduced_header"];
            only_keys(r, {"c2s", "s2c"}, "config.analysis.reference_reduced_header");
            if (r.contains("c2s")) cfg.reference_e_rh_c2s = number(r["c2s"], "config.analysis.reference_reduced_header.c2s");
            if (r.contains("s2c")) cfg.reference_e_rh_s2c = number(r["s2c"], "config.analysis.reference_reduced_header.s2c");
        }
    }
    if (doc.contains("run")) {
        const json& r = doc["run"];
        only_keys(r, {"packets_per_player"}, "config.run");
        if (r.contains("packets_per_player")) cfg.packets_per_player = count(r["packets_per_player"], "config.run.packets_per_player");
    }
    return cfg;
}

} // namespace tcm
