#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcm/analytics.hpp"
#include "tcm/qoe.hpp"
#include "tcm/tcm_mux.hpp"
#include "tcm/traffic_model.hpp"

namespace tcm {

/// Malformed, unknown or inconsistent configuration.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Profiles are JSON objects; unknown keys are rejected. See
/// docs/format.md for the schema.
GameProfile profile_from_json(const std::string& text);
std::string profile_to_json(const GameProfile& profile);
GameProfile load_profile_file(const std::filesystem::path& path);

/// Accepts either a full profile (its field model is returned) or an
/// object of the form {"c2s": {"fields": ...}, "s2c": {"fields": ...}}.
FieldDeltaModel field_model_from_json(const std::string& text);

/// Environment variable naming the default tool configuration file.
inline constexpr const char* kConfigEnvVar = "TCMSIM_CONFIG";

struct ToolConfig
{
    std::vector<GameProfile> profiles = builtin_profiles();
    MuxConfig mux;
    std::size_t packets_per_player = 5000;
    double network_delay_ms = 20.0;
    double network_jitter_ms = 10.0;
    std::string qoe_model = "logistic";
    QoeParams qoe_params;
    MeasureOptions measure;
    /// E[RH] used for the game asymptote table (trace-derived values).
    double reference_e_rh_c2s = 8.72;
    double reference_e_rh_s2c = 7.37;

    /// Throws ConfigError for an unknown game.
    const GameProfile& profile(const std::string& name) const;
};

/// Built-in defaults overlaid with the file's settings. Profiles in the file
/// replace built-ins of the same name and add new ones.
ToolConfig load_tool_config(const std::filesystem::path& path);

} // namespace tcm
