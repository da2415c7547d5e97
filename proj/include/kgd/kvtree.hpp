#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace kgd {

/// Parses the human-editable key-value tree format into JSON.
///
/// Grammar (whitespace and `#` comments are insignificant):
///
///     document := entry*
///     entry    := KEY '=' value | KEY '{' entry* '}'
///     value    := scalar | '[' (scalar (',' scalar)*)? ']'
///     scalar   := NUMBER | IDENT | "quoted string" | true | false
///
/// A key that appears more than once in the same block becomes a JSON
/// array of its values, in source order. Numbers without a fraction or
/// exponent are integers. Identifiers become strings.
nlohmann::json parse_kvtree(std::string_view text);

/// Accepts either a JSON document (first non-space character is `{`) or
/// the key-value tree format.
nlohmann::json parse_config_text(std::string_view text);

/// Normalizes a field that may hold one object or an array of objects.
nlohmann::json as_list(const nlohmann::json& value);

/// Canonical JSON rendering: sorted keys, no whitespace, shortest
/// round-trip number formatting.
std::string canonical_json(const nlohmann::json& value);

std::string read_text_file(const std::string& path);

}  // namespace kgd
