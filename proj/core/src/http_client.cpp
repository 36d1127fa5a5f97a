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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "http_client.hpp"

#include <memory>
#include <regex>

#include "crat/error.hpp"

namespace crat::detail {

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

Url parse_url(std::string_view url) {
    static const std::regex re(R"(^(https?)://([A-Za-z0-9.\-_]+|\[[0-9A-Fa-f:]+\])(?::([0-9]{1,5}))?(/[^\s]*)?$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(url.begin(), url.end(), m, re)) {
        throw Error(ErrorKind::configuration, "malformed URL '" + std::string(url) + "'");
    }
    Url u;
    u.scheme = m[1].str();
    u.host = m[2].str();
    u.port = m[3].matched ? std::stoi(m[3].str()) : (u.scheme == "https" ? 443 : 80);
    u.path = m[4].matched ? m[4].str() : "/";
    if (u.port <= 0 || u.port > 65535) {
        throw Error(ErrorKind::configuration, "port out of range in '" + std::string(url) + "'");
    }
    return u;
}

namespace {

std::unique_ptr<httplib::ClientImpl> make_client(const Url& url, std::chrono::milliseconds timeout) {
    std::unique_ptr<httplib::ClientImpl> cli;
    if (url.scheme == "https") {
        auto ssl = std::make_unique<httplib::SSLClient>(url.host, url.port);
        ssl->enable_server_certificate_verification(true);
        cli = std::move(ssl);
    } else {
        cli = std::make_unique<httplib::ClientImpl>(url.host, url.port);
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    cli->set_connection_timeout(secs.count(), usecs.count());
    cli->set_read_timeout(secs.count(), usecs.count());
    cli->set_write_timeout(secs.count(), usecs.count());
    return cli;
}

HttpResponse finish(const httplib::Result& res, const Url& url) {
    if (!res) {
        throw Error(ErrorKind::transport,
                    "request to " + url.origin() + url.path + " failed: " + httplib::to_string(res.error()));
    }
    return {res->status, res->body};
}

}  // namespace

HttpResponse http_post(const Url& url, const std::string& body, const Headers& headers,
                       std::chrono::milliseconds timeout) {
    auto cli = make_client(url, timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    return finish(cli->Post(url.path, h, body, "application/json"), url);
}

HttpResponse http_get(const Url& url, const Headers& query, std::chrono::milliseconds timeout) {
    auto cli = make_client(url, timeout);
    httplib::Params params;
    for (const auto& [k, v] : query) params.emplace(k, v);
    return finish(cli->Get(url.path, params, httplib::Headers{}), url);
}

}  // namespace crat::detail
