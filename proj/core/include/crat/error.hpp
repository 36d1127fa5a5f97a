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
#include <stdexcept>
#include <string>
#include <string_view>

namespace crat {

enum class ErrorKind {
    invalid_argument,
    parse,
    io,
    configuration,
    unknown_backend,
    duplicate_backend,
    scripted_miss,
    transport,
    rate_limited,
    http_status,
    protocol,
    empty_response,
    detection,
    extraction,
    translation,
    evaluation,
    retrieval_source,
    duplicate_id,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed serialized input. `position` is a byte offset (or a 1-based
/// line number for line-oriented formats, see `line()`).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position, std::size_t line = 0)
        : Error(ErrorKind::parse, message), position_(position), line_(line) {}

    std::size_t position() const noexcept { return position_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t position_;
    std::size_t line_;
};

/// Non-2xx reply from an HTTP endpoint.
class HttpStatusError : public Error {
public:
    HttpStatusError(int status, std::string body_excerpt)
        : Error(ErrorKind::http_status,
                "HTTP status " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_excerpt_(std::move(body_excerpt)) {}

    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

}  // namespace crat
