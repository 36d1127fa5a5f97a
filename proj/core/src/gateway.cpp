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

#include "crat/gateway.hpp"

#include <atomic>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "crat/error.hpp"
#include "crat/text.hpp"
#include "http_client.hpp"
#include "json_util.hpp"

namespace crat {

using detail::json;

std::string_view to_string(ChatRole r) noexcept {
    switch (r) {
    case ChatRole::system: return "system";
    case ChatRole::user: return "user";
    case ChatRole::assistant: return "assistant";
    }
    return "user";
}

namespace {

ChatRole parse_role(std::string_view s) {
    for (auto r : {ChatRole::system, ChatRole::user, ChatRole::assistant}) {
        if (to_string(r) == s) return r;
    }
    detail::schema_error("message", "unknown role '" + std::string(s) + "'");
}

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void validate(const ChatRequest& request, int ceiling) {
    if (request.messages.empty()) {
        throw Error(ErrorKind::invalid_argument, "chat request has no messages");
    }
    if (request.messages.front().role == ChatRole::assistant) {
        throw Error(ErrorKind::invalid_argument, "first message must be system or user");
    }
    if (request.params.temperature < 0.0) {
        throw Error(ErrorKind::invalid_argument, "temperature must be >= 0");
    }
    if (request.params.max_new_tokens <= 0 || request.params.max_new_tokens > ceiling) {
        throw Error(ErrorKind::invalid_argument,
                    "max_new_tokens must be in [1, " + std::to_string(ceiling) + "]");
    }
}

}  // namespace

json request_to_json(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json params = {{"temperature", request.params.temperature},
                   {"max_new_tokens", request.params.max_new_tokens}};
    if (request.params.stop) params["stop"] = *request.params.stop;
    return {{"backend_id", request.backend_id}, {"messages", messages}, {"params", params}};
}

ChatRequest request_from_json(const json& j) {
    ChatRequest r;
    r.backend_id = detail::require_string(j, "backend_id", "request");
    for (const auto& m : detail::require_array(j, "messages", "request")) {
        r.messages.push_back({parse_role(detail::require_string(m, "role", "message")),
                              detail::require_string(m, "content", "message")});
    }
    const auto& p = detail::require(j, "params", "request");
    r.params.temperature = detail::require(p, "temperature", "params").get<double>();
    r.params.max_new_tokens = detail::require(p, "max_new_tokens", "params").get<int>();
    if (p.contains("stop")) r.params.stop = p["stop"].get<std::vector<std::string>>();
    return r;
}

std::string fingerprint(const ChatRequest& request) {
    return text::sha256_hex(request_to_json(request).dump(-1, ' ', false, json::error_handler_t::replace));
}

std::string joined_content(const ChatRequest& request) {
    std::string out;
    for (const auto& m : request.messages) {
        if (!out.empty()) out.push_back('\n');
        out += m.content;
    }
    return out;
}

// ---- mock -------------------------------------------------------------------

MockRule MockRule::exact(std::string fp, std::string response) {
    MockRule r;
    r.fingerprint = std::move(fp);
    r.response = std::move(response);
    return r;
}

MockRule MockRule::containing(std::string needle, std::string response) {
    MockRule r;
    r.contains_all.push_back(std::move(needle));
    r.response = std::move(response);
    return r;
}

MockFallback echo_last_user() {
    return [](const ChatRequest& request) {
        for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
            if (it->role == ChatRole::user) return it->content;
        }
        return std::string{};
    };
}

MockBackend::MockBackend(std::vector<MockRule> script, MockFallback fallback)
    : script_(std::move(script)), fallback_(std::move(fallback)) {}

std::string MockBackend::complete(const ChatRequest& request, const std::string& fp) {
    const std::string content = joined_content(request);
    for (const auto& rule : script_) {
        if (rule.fingerprint) {
            if (*rule.fingerprint == fp) return rule.response;
            continue;
        }
        bool ok = true;
        for (const auto& s : rule.contains_all) ok = ok && content.find(s) != std::string::npos;
        for (const auto& s : rule.contains_none) ok = ok && content.find(s) == std::string::npos;
        if (ok) return rule.response;
    }
    if (fallback_) return fallback_(request);
    std::string head(text::truncate_code_points(content, 120));
    throw Error(ErrorKind::scripted_miss,
                "no scripted reply for request " + fp.substr(0, 12) + " to '" + request.backend_id +
                    "': " + head);
}

// ---- http -------------------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    detail::parse_url(config_.endpoint_url);
    if (!config_.auth_token_env_var.empty()) {
        const char* tok = std::getenv(config_.auth_token_env_var.c_str());
        if (tok == nullptr || *tok == '\0') {
            throw Error(ErrorKind::configuration,
                        "environment variable " + config_.auth_token_env_var + " is not set");
        }
        token_ = tok;
    }
    if (config_.model_name.empty()) {
        throw Error(ErrorKind::configuration, "http backend needs a model name");
    }
}

json HttpBackend::marshal(const ChatRequest& request, const std::string& model) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json body = {{"model", model},
                 {"messages", messages},
                 {"temperature", request.params.temperature},
                 {"max_tokens", request.params.max_new_tokens}};
    if (request.params.stop) body["stop"] = *request.params.stop;
    return body;
}

std::string HttpBackend::unmarshal(std::string_view body) {
    json j;
    try {
        j = json::parse(body.begin(), body.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::protocol, std::string("provider reply is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw Error(ErrorKind::protocol, "provider reply has no choices");
    }
    const auto& choice = j["choices"][0];
    if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object() ||
        !choice["message"].contains("content") || !choice["message"]["content"].is_string()) {
        throw Error(ErrorKind::protocol, "provider reply has no message content");
    }
    return choice["message"]["content"].get<std::string>();
}

std::string HttpBackend::complete(const ChatRequest& request, const std::string&) {
    const auto url = detail::parse_url(config_.endpoint_url);
    detail::Headers headers;
    if (!token_.empty()) headers.emplace_back("Authorization", "Bearer " + token_);
    const auto body = marshal(request, config_.model_name).dump(-1, ' ', false, json::error_handler_t::replace);
    const auto res = detail::http_post(url, body, headers, config_.timeout);
    if (res.status == 429) {
        throw Error(ErrorKind::rate_limited, "rate limited by " + url.origin());
    }
    if (res.status < 200 || res.status >= 300) {
        throw HttpStatusError(res.status, std::string(text::truncate_code_points(res.body, 200)));
    }
    return unmarshal(res.body);
}

// ---- gateway ----------------------------------------------------------------

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
    if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
}

void Gateway::register_backend(const std::string& id, std::shared_ptr<Backend> backend) {
    if (id.empty()) throw Error(ErrorKind::invalid_argument, "backend id must be non-empty");
    std::unique_lock lock(mutex_);
    if (!backends_.emplace(id, std::move(backend)).second) {
        throw Error(ErrorKind::duplicate_backend, "backend '" + id + "' already registered");
    }
}

std::string Gateway::register_mock(const std::string& id, std::vector<MockRule> script,
                                   MockFallback fallback) {
    register_backend(id, std::make_shared<MockBackend>(std::move(script), std::move(fallback)));
    return id;
}

std::string Gateway::register_http(const std::string& id, HttpBackendConfig config) {
    register_backend(id, std::make_shared<HttpBackend>(std::move(config)));
    return id;
}

bool Gateway::has_backend(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return backends_.contains(id);
}

std::shared_ptr<Backend> Gateway::lookup(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = backends_.find(id);
    if (it == backends_.end()) throw Error(ErrorKind::unknown_backend, "unknown backend '" + id + "'");
    return it->second;
}

std::filesystem::path Gateway::cache_path(const std::string& fp) const {
    if (!options_.cache_dir) throw Error(ErrorKind::invalid_argument, "caching disabled");
    return *options_.cache_dir / fp.substr(0, 2) / (fp + ".json");
}

std::optional<std::string> Gateway::cache_read(const std::string& fp) const {
    const auto path = cache_path(fp);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        auto j = json::parse(ss.str());
        auto text = j.at("response_text").get<std::string>();
        if (text.empty()) return std::nullopt;
        return text;
    } catch (const json::exception&) {
        return std::nullopt;  // unreadable entry is treated as a miss and rewritten
    }
}

void Gateway::cache_write(const ChatRequest& request, const std::string& fp,
                          const std::string& response) const {
    static std::atomic<unsigned> counter{0};
    const auto path = cache_path(fp);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::io, "cannot create cache directory: " + ec.message());
    const json entry = {{"request", request_to_json(request)},
                        {"response_text", response},
                        {"timestamp", iso8601_now()}};
    std::ostringstream tmp_name;
    tmp_name << path.filename().string() << ".tmp." << std::this_thread::get_id() << "." << counter++;
    const auto tmp = path.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write cache entry " + tmp.string());
        out << detail::canonical_dump(entry);
        if (!out) throw Error(ErrorKind::io, "short write on cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::io, "cannot publish cache entry " + path.string());
    }
}

ChatExchange Gateway::complete(const ChatRequest& request) {
    validate(request, options_.max_new_tokens_ceiling);
    auto backend = lookup(request.backend_id);

    ChatExchange ex;
    ex.request = request;
    ex.fingerprint = fingerprint(request);
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    };

    if (caching()) {
        if (auto hit = cache_read(ex.fingerprint)) {
            ex.response_text = std::move(*hit);
            ex.cache_hit = true;
            ex.latency_ms = elapsed();
            return ex;
        }
    }

    auto delay = options_.retry.base_delay;
    for (int attempt = 1;; ++attempt) {
        ex.attempts = attempt;
        try {
            ex.response_text = backend->complete(request, ex.fingerprint);
            break;
        } catch (const Error& e) {
            const bool retryable = e.kind() == ErrorKind::transport || e.kind() == ErrorKind::rate_limited;
            if (!retryable) throw;
            if (attempt >= options_.retry.max_attempts) {
                throw Error(e.kind(), std::string(e.what()) + " (gave up after " +
                                          std::to_string(attempt) + " attempts)");
            }
        }
        std::this_thread::sleep_for(delay);
        delay = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(delay.count()) * options_.retry.multiplier));
    }

    if (ex.response_text.empty()) {
        throw Error(ErrorKind::empty_response,
                    "backend '" + request.backend_id + "' returned an empty response");
    }
    if (caching()) cache_write(request, ex.fingerprint, ex.response_text);
    ex.latency_ms = elapsed();
    return ex;
}

}  // namespace crat
