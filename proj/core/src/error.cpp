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

#include "crat/error.hpp"

namespace crat {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::unknown_backend: return "unknown_backend";
    case ErrorKind::duplicate_backend: return "duplicate_backend";
    case ErrorKind::scripted_miss: return "scripted_miss";
    case ErrorKind::transport: return "transport";
    case ErrorKind::rate_limited: return "rate_limited";
    case ErrorKind::http_status: return "http_status";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::empty_response: return "empty_response";
    case ErrorKind::detection: return "detection";
    case ErrorKind::extraction: return "extraction";
    case ErrorKind::translation: return "translation";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::retrieval_source: return "retrieval_source";
    case ErrorKind::duplicate_id: return "duplicate_id";
    }
    return "unknown";
}

}  // namespace crat
