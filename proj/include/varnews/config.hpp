#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace varnews::config {

/// Parses the TOML subset used by experiment files: `[table]` and `[a.b]` headers, `key = value`
/// with bare or quoted keys, basic strings, integers, floats, booleans, arrays of those (may span
/// lines) and `#` comments. Errors name the source and line.
[[nodiscard]] nlohmann::json parse_toml(std::string_view text, const std::string& source_name);

}  // namespace varnews::config
