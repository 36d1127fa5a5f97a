// Copyright 2026 The crat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <nlohmann/json.hpp>

#include <set>
#include <string>
#include <string_view>

#include "crat/error.hpp"

namespace crat::detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(std::string_view where, std::string_view what) {
    throw ParseError(std::string(where) + ": " + std::string(what), 0);
}

inline const json& require(const json& obj, const char* key, std::string_view where) {
    if (!obj.is_object()) schema_error(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
    return *it;
}

inline std::string require_string(const json& obj, const char* key, std::string_view where) {
    const auto& v = require(obj, key, where);
    if (!v.is_string()) schema_error(where, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

inline const json& require_array(const json& obj, const char* key, std::string_view where) {
    const auto& v = require(obj, key, where);
    if (!v.is_array()) schema_error(where, std::string("field '") + key + "' must be an array");
    return v;
}

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                std::string_view where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.contains(it.key())) schema_error(where, "unknown key '" + it.key() + "'");
    }
}

/// Parses JSON text, translating library errors into ParseError.
inline json parse_json(std::string_view bytes, std::string_view what) {
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what(), e.byte);
    }
}

inline std::string canonical_dump(const json& j) { return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n"; }

}  // namespace crat::detail
