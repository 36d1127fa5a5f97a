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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace crat {

enum class ChatRole { system, user, assistant };

std::string_view to_string(ChatRole r) noexcept;

struct ChatMessage {
    ChatRole role = ChatRole::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline constexpr int kDefaultMaxNewTokens = 2048;

struct ChatParams {
    double temperature = 0.0;
    int max_new_tokens = kDefaultMaxNewTokens;
    std::optional<std::vector<std::string>> stop;

    friend bool operator==(const ChatParams&, const ChatParams&) = default;
};

struct ChatRequest {
    std::string backend_id;
    std::vector<ChatMessage> messages;
    ChatParams params;

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

/// One completed gateway call.
struct ChatExchange {
    ChatRequest request;
    std::string response_text;
    std::int64_t latency_ms = 0;
    bool cache_hit = false;
    std::string fingerprint;
    int attempts = 0;  // transport attempts; 0 on a cache hit
};

nlohmann::json request_to_json(const ChatRequest& request);
ChatRequest request_from_json(const nlohmann::json& j);

/// Stable SHA-256 over (backend_id, messages, params) in canonical JSON.
std::string fingerprint(const ChatRequest& request);

/// Concatenation of every message's content, newline separated.
std::string joined_content(const ChatRequest& request);

/// A model endpoint. Implementations throw crat::Error; kinds `transport`
/// and `rate_limited` are retried by the gateway.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const ChatRequest& request, const std::string& fingerprint) = 0;
};

/// One scripted reply. A rule matches when its fingerprint equals the
/// request's, or (without a fingerprint) when every `contains_all` string
/// occurs and no `contains_none` string occurs in the joined message content.
struct MockRule {
    std::optional<std::string> fingerprint;
    std::vector<std::string> contains_all;
    std::vector<std::string> contains_none;
    std::string response;

    static MockRule exact(std::string fp, std::string response);
    static MockRule containing(std::string needle, std::string response);
};

using MockFallback = std::function<std::string(const ChatRequest&)>;

/// Reply with the content of the last user message.
MockFallback echo_last_user();

/// Deterministic scripted backend; first matching rule wins.
class MockBackend : public Backend {
public:
    MockBackend(std::vector<MockRule> script, MockFallback fallback);
    std::string complete(const ChatRequest& request, const std::string& fingerprint) override;

private:
    std::vector<MockRule> script_;
    MockFallback fallback_;
};

enum class RequestShape { openai_chat_v1 };

struct HttpBackendConfig {
    std::string endpoint_url;     // e.g. https://api.example.com/v1/chat/completions
    std::string auth_token_env_var;  // empty: no Authorization header
    std::string model_name;
    RequestShape shape = RequestShape::openai_chat_v1;
    std::chrono::milliseconds timeout{60000};
};

/// Chat-completions client for the common JSON wire shape.
class HttpBackend : public Backend {
public:
    /// Throws Error(configuration) on a malformed URL or missing token variable.
    explicit HttpBackend(HttpBackendConfig config);
    std::string complete(const ChatRequest& request, const std::string& fingerprint) override;

    static nlohmann::json marshal(const ChatRequest& request, const std::string& model);
    /// First choice's message content. Throws Error(protocol) on a malformed payload.
    static std::string unmarshal(std::string_view body);

private:
    HttpBackendConfig config_;
    std::string token_;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{250};
    double multiplier = 2.0;
};

struct GatewayOptions {
    std::optional<std::filesystem::path> cache_dir;
    int max_new_tokens_ceiling = kDefaultMaxNewTokens;
    RetryPolicy retry;
};

/// Registry of backends plus the content-addressed response cache.
/// complete() may be called concurrently; registration takes an exclusive lock.
class Gateway {
public:
    explicit Gateway(GatewayOptions options = {});

    void register_backend(const std::string& id, std::shared_ptr<Backend> backend);
    std::string register_mock(const std::string& id, std::vector<MockRule> script,
                              MockFallback fallback = nullptr);
    std::string register_http(const std::string& id, HttpBackendConfig config);

    bool has_backend(const std::string& id) const;
    const GatewayOptions& options() const noexcept { return options_; }
    bool caching() const noexcept { return options_.cache_dir.has_value(); }

    ChatExchange complete(const ChatRequest& request);

    /// Path of the cache entry for a fingerprint: <dir>/<fp[0:2]>/<fp>.json
    std::filesystem::path cache_path(const std::string& fingerprint) const;

private:
    std::shared_ptr<Backend> lookup(const std::string& id) const;
    std::optional<std::string> cache_read(const std::string& fingerprint) const;
    void cache_write(const ChatRequest& request, const std::string& fingerprint,
                     const std::string& response) const;

    GatewayOptions options_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<Backend>> backends_;
};

}  // namespace crat
