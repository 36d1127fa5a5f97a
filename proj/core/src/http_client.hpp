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

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crat::detail {

struct Url {
    std::string scheme;  // http or https
    std::string host;
    int port = 0;
    std::string path;  // begins with '/'

    std::string origin() const;
};

/// Throws Error(configuration) if `url` is not http(s)://host[:port][/path].
Url parse_url(std::string_view url);

struct HttpResponse {
    int status = 0;
    std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

/// Transport failures (connect, timeout, TLS) throw Error(transport).
HttpResponse http_post(const Url& url, const std::string& body, const Headers& headers,
                       std::chrono::milliseconds timeout);

HttpResponse http_get(const Url& url, const Headers& query, std::chrono::milliseconds timeout);

}  // namespace crat::detail
