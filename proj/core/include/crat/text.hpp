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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crat::text {

/// One decoded UTF-8 code point and its byte extent in the input.
struct CodePoint {
    char32_t value;
    std::size_t offset;
    std::size_t size;
};

/// Decodes UTF-8 leniently: each invalid byte becomes U+FFFD of size 1.
std::vector<CodePoint> decode_utf8(std::string_view s);

std::size_t count_code_points(std::string_view s);

/// Prefix of `s` holding at most `max_code_points` code points.
std::string_view truncate_code_points(std::string_view s, std::size_t max_code_points);

/// Han ideographs, CJK punctuation, kana and fullwidth forms.
bool is_cjk(char32_t c) noexcept;
bool is_cjk_punctuation(char32_t c) noexcept;

std::string_view trim(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);

/// Number of non-overlapping occurrences of `needle` in `haystack`.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace crat::text
