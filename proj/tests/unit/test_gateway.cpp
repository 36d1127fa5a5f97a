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

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <future>

#include <nlohmann/json.hpp>

#include "crat/error.hpp"
#include "crat/gateway.hpp"
#include "fixtures.hpp"
#include "stub_server.hpp"

using namespace crat;
using nlohmann::json;

namespace {

ChatRequest req(const std::string& backend, const std::string& user) {
    return {backend, {{ChatRole::system, "sys"}, {ChatRole::user, user}}, {}};
}

GatewayOptions fast(std::optional<std::filesystem::path> cache = std::nullopt) {
    GatewayOptions o;
    o.cache_dir = std::move(cache);
    o.retry.base_delay = std::chrono::milliseconds(1);
    return o;
}

/// Fails with `kind` for the first `failures` calls, then answers "ok".
class Flaky : public Backend {
public:
    Flaky(int failures, ErrorKind kind, std::string reply = "ok")
        : failures_(failures), kind_(kind), reply_(std::move(reply)) {}
    std::string complete(const ChatRequest&, const std::string&) override {
        ++calls;
        if (calls <= failures_) throw Error(kind_, "scripted failure");
        return reply_;
    }
    std::atomic<int> calls{0};

private:
    int failures_;
    ErrorKind kind_;
    std::string reply_;
};

}  // namespace

TEST_SUITE("gateway") {

TEST_CASE("fingerprint depends on every request field") {
    const auto base = req("m", "hello");
    const auto fp = fingerprint(base);
    CHECK(fp.size() == 64);
    CHECK(fingerprint(base) == fp);
    auto other = base;
    other.backend_id = "n";
    CHECK(fingerprint(other) != fp);
    other = base;
    other.params.temperature = 0.5;
    CHECK(fingerprint(other) != fp);
    other = base;
    other.params.stop = std::vector<std::string>{"\n"};
    CHECK(fingerprint(other) != fp);
    other = base;
    other.messages[0].role = ChatRole::user;
    CHECK(fingerprint(other) != fp);
    CHECK(request_from_json(request_to_json(base)) == base);
}

TEST_CASE("mock rules: first match wins, fingerprints and exclusions") {
    Gateway gw(fast());
    const auto target = req("m", "alpha beta");
    MockRule excluded;
    excluded.contains_all = {"alpha"};
    excluded.contains_none = {"beta"};
    excluded.response = "excluded";
    gw.register_mock("m", {excluded, MockRule::exact(fingerprint(target), "by fingerprint"),
                           MockRule::containing("alpha", "first"), MockRule::containing("alpha", "second")});
    CHECK(gw.complete(target).response_text == "by fingerprint");
    CHECK(gw.complete(req("m", "alpha gamma")).response_text == "excluded");
    CHECK(gw.complete(req("m", "alpha beta gamma")).response_text == "first");
    try {
        gw.complete(req("m", "nothing"));
        FAIL("expected a scripted miss");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::scripted_miss);
    }
}

TEST_CASE("echo fallback returns the last user message") {
    Gateway gw(fast());
    gw.register_mock("echo", {}, echo_last_user());
    ChatRequest r{"echo", {{ChatRole::user, "one"}, {ChatRole::assistant, "two"}, {ChatRole::user, "three"}}, {}};
    CHECK(gw.complete(r).response_text == "three");
}

TEST_CASE("registry rejects duplicates and unknown ids") {
    Gateway gw(fast());
    gw.register_mock("m", {});
    CHECK(gw.has_backend("m"));
    CHECK_FALSE(gw.has_backend("x"));
    try {
        gw.register_mock("m", {});
        FAIL("expected duplicate");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::duplicate_backend);
    }
    try {
        gw.complete(req("x", "hi"));
        FAIL("expected unknown");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unknown_backend);
    }
}

TEST_CASE("requests are validated") {
    Gateway gw(fast());
    gw.register_mock("m", {}, echo_last_user());
    ChatRequest empty{"m", {}, {}};
    CHECK_THROWS_AS(gw.complete(empty), Error);
    ChatRequest assistant_first{"m", {{ChatRole::assistant, "x"}}, {}};
    CHECK_THROWS_AS(gw.complete(assistant_first), Error);
    auto hot = req("m", "x");
    hot.params.temperature = -1;
    CHECK_THROWS_AS(gw.complete(hot), Error);
    auto long_reply = req("m", "x");
    long_reply.params.max_new_tokens = kDefaultMaxNewTokens + 1;
    CHECK_THROWS_AS(gw.complete(long_reply), Error);
    long_reply.params.max_new_tokens = 0;
    CHECK_THROWS_AS(gw.complete(long_reply), Error);
}

TEST_CASE("cache entries are content addressed and reused") {
    test::TempDir dir;
    auto backend = std::make_shared<Flaky>(0, ErrorKind::transport, "cached reply");
    Gateway gw(fast(dir.path()));
    gw.register_backend("m", backend);
    const auto r = req("m", "hello");
    const auto first = gw.complete(r);
    CHECK_FALSE(first.cache_hit);
    CHECK(first.attempts == 1);
    const auto path = gw.cache_path(first.fingerprint);
    CHECK(path == dir.path() / first.fingerprint.substr(0, 2) / (first.fingerprint + ".json"));
    REQUIRE(std::filesystem::exists(path));
    const auto entry = json::parse(test::read_file(path));
    CHECK(entry["response_text"] == "cached reply");
    CHECK(request_from_json(entry["request"]) == r);
    CHECK(entry.contains("timestamp"));
    for (const auto& e : std::filesystem::directory_iterator(path.parent_path())) {
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
    }

    const auto second = gw.complete(r);
    CHECK(second.cache_hit);
    CHECK(second.attempts == 0);
    CHECK(second.response_text == "cached reply");
    CHECK(backend->calls == 1);

    // a second gateway over the same directory also hits
    Gateway other(fast(dir.path()));
    other.register_mock("m", {});
    CHECK(other.complete(r).cache_hit);
}

TEST_CASE("a corrupt cache entry is a miss and gets rewritten") {
    test::TempDir dir;
    Gateway gw(fast(dir.path()));
    gw.register_mock("m", {MockRule::containing("hello", "fresh")});
    const auto r = req("m", "hello");
    test::write_file(gw.cache_path(fingerprint(r)), "{not json");
    const auto ex = gw.complete(r);
    CHECK_FALSE(ex.cache_hit);
    CHECK(ex.response_text == "fresh");
    CHECK(json::parse(test::read_file(gw.cache_path(ex.fingerprint)))["response_text"] == "fresh");
}

TEST_CASE("concurrent callers share one cache safely") {
    test::TempDir dir;
    Gateway gw(fast(dir.path()));
    gw.register_mock("m", {}, echo_last_user());
    std::vector<std::future<std::string>> jobs;
    for (int i = 0; i < 32; ++i) {
        jobs.push_back(std::async(std::launch::async, [&gw, i] {
            return gw.complete(req("m", "msg " + std::to_string(i % 4))).response_text;
        }));
    }
    for (int i = 0; i < 32; ++i) CHECK(jobs[i].get() == "msg " + std::to_string(i % 4));
}

TEST_CASE("transport and rate-limit errors retry up to the limit") {
    for (auto kind : {ErrorKind::transport, ErrorKind::rate_limited}) {
        Gateway gw(fast());
        auto recovering = std::make_shared<Flaky>(2, kind);
        gw.register_backend("r", recovering);
        const auto ex = gw.complete(req("r", "x"));
        CHECK(ex.attempts == 3);
        CHECK(ex.response_text == "ok");

        auto dead = std::make_shared<Flaky>(10, kind);
        gw.register_backend("d", dead);
        try {
            gw.complete(req("d", "x"));
            FAIL("expected give-up");
        } catch (const Error& e) {
            CHECK(e.kind() == kind);
            CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
        }
        CHECK(dead->calls == 3);
    }
}

TEST_CASE("other errors are not retried") {
    Gateway gw(fast());
    auto b = std::make_shared<Flaky>(5, ErrorKind::protocol);
    gw.register_backend("p", b);
    CHECK_THROWS_AS(gw.complete(req("p", "x")), Error);
    CHECK(b->calls == 1);
}

TEST_CASE("empty responses are errors and never cached") {
    test::TempDir dir;
    Gateway gw(fast(dir.path()));
    gw.register_mock("m", {MockRule::containing("x", "")});
    const auto r = req("m", "x");
    try {
        gw.complete(r);
        FAIL("expected empty_response");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::empty_response);
    }
    CHECK_FALSE(std::filesystem::exists(gw.cache_path(fingerprint(r))));
}

TEST_CASE("http marshal and unmarshal") {
    auto r = req("h", "hi");
    r.params.stop = std::vector<std::string>{"END"};
    const auto body = HttpBackend::marshal(r, "model-x");
    CHECK(body["model"] == "model-x");
    CHECK(body["max_tokens"] == kDefaultMaxNewTokens);
    CHECK(body["messages"][1] == json{{"role", "user"}, {"content", "hi"}});
    CHECK(body["stop"] == json{"END"});
    CHECK(HttpBackend::unmarshal(R"({"choices":[{"message":{"role":"assistant","content":"yo"}}]})") == "yo");
    for (auto bad : {"nope", "{}", R"({"choices":[]})", R"({"choices":[{"message":{}}]})"}) {
        try {
            HttpBackend::unmarshal(bad);
            FAIL("expected protocol error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::protocol);
        }
    }
}

TEST_CASE("http backend configuration errors") {
    CHECK_THROWS_AS(HttpBackend({"not a url", "", "m"}), Error);
    CHECK_THROWS_AS(HttpBackend({"http://127.0.0.1:1/v1", "", ""}), Error);
    ::unsetenv("CRAT_TEST_MISSING_TOKEN");
    try {
        HttpBackend({"http://127.0.0.1:1/v1", "CRAT_TEST_MISSING_TOKEN", "m"});
        FAIL("expected configuration error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::configuration);
    }
}

TEST_CASE("http backend against a stub server") {
    test::StubServer stub;
    std::atomic<int> hits{0};
    std::string auth;
    json seen;
    stub.server().Post("/v1/chat", [&](const httplib::Request& rq, httplib::Response& rs) {
        ++hits;
        auth = rq.get_header_value("Authorization");
        seen = json::parse(rq.body);
        rs.set_content(R"({"choices":[{"message":{"content":"served"}}]})", "application/json");
    });
    stub.server().Post("/busy", [&](const httplib::Request&, httplib::Response& rs) {
        ++hits;
        rs.status = 429;
    });
    stub.server().Post("/broken", [&](const httplib::Request&, httplib::Response& rs) {
        rs.status = 503;
        rs.set_content("down for maintenance", "text/plain");
    });
    stub.start();

    ::setenv("CRAT_TEST_TOKEN", "secret", 1);
    Gateway gw(fast());
    gw.register_http("ok", {stub.url("/v1/chat"), "CRAT_TEST_TOKEN", "model-x", RequestShape::openai_chat_v1,
                            std::chrono::milliseconds(5000)});
    const auto ex = gw.complete(req("ok", "ping"));
    CHECK(ex.response_text == "served");
    CHECK(auth == "Bearer secret");
    CHECK(seen["model"] == "model-x");
    CHECK(seen["messages"][1]["content"] == "ping");

    hits = 0;
    gw.register_http("busy", {stub.url("/busy"), "", "m"});
    try {
        gw.complete(req("busy", "x"));
        FAIL("expected rate limit");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::rate_limited);
    }
    CHECK(hits == 3);

    gw.register_http("broken", {stub.url("/broken"), "", "m"});
    try {
        gw.complete(req("broken", "x"));
        FAIL("expected http status");
    } catch (const HttpStatusError& e) {
        CHECK(e.status() == 503);
        CHECK(e.body_excerpt() == "down for maintenance");
    }

    stub.stop();
    gw.register_http("gone", {stub.url("/v1/chat"), "", "m", RequestShape::openai_chat_v1,
                              std::chrono::milliseconds(500)});
    try {
        gw.complete(req("gone", "x"));
        FAIL("expected transport error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::transport);
    }
}

}
