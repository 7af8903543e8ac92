#pragma once

#include "eikf/sim.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace eikf {

using Json = nlohmann::json;

/// Full configuration with every field present.
Json to_json(const ScenarioConfig& cfg);

/// Missing fields take their defaults. Unknown keys and type mismatches throw ConfigError.
ScenarioConfig config_from_json(const Json& j);

/// Reads and parses a config file, or the "config" member of a run manifest.
Json load_config_json(const std::string& path);

/// Sets a dotted path such as "noise.sigma_camera=0.5". The value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(Json& j, const std::string& assignment);

/// Key-sorted compact serialization.
std::string canonical_dump(const Json& j);
/// FNV-1a of canonical_dump, as 16 hex digits.
std::string config_hash(const Json& j);

}  // namespace eikf
