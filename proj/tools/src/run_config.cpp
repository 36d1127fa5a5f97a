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

#include "crat/cli/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "crat/error.hpp"
#include "crat/retrieval.hpp"
#include "crat/text.hpp"

namespace crat::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::configuration, where + ": " + what);
}

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) bad(where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.contains(it.key())) bad(where, "unknown key '" + it.key() + "'");
    }
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) bad(where, std::string("missing '") + key + "'");
    if (!it->is_string()) bad(where, std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

template <class T>
T get_or(json& obj, const char* key, T fallback, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        obj[key] = fallback;
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        bad(where, std::string("'") + key + "' has the wrong type");
    }
}

std::size_t get_count(json& obj, const char* key, std::size_t fallback, std::size_t min, const std::string& where) {
    auto it = obj.find(key);
    if (it != obj.end() && !it->is_number_unsigned()) {
        bad(where, std::string("'") + key + "' must be a non-negative integer");
    }
    const auto v = get_or<std::size_t>(obj, key, fallback, where);
    if (v < min) bad(where, std::string("'") + key + "' must be >= " + std::to_string(min));
    return v;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (!it->is_array()) bad(where, std::string("'") + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) bad(where, std::string("'") + key + "' must be an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

void normalize_backend(const std::string& id, json& def, const std::filesystem::path& base) {
    const std::string where = "backends." + id;
    const auto kind = get_string(def, "kind", where);
    if (kind == "mock") {
        only_keys(def, {"kind", "rules", "fallback"}, where);
        const auto fallback = get_or<std::string>(def, "fallback", "none", where);
        if (fallback != "none" && fallback != "echo_last_user") bad(where, "fallback must be none or echo_last_user");
        auto& rules = def["rules"];
        if (rules.is_null()) rules = json::array();
        if (!rules.is_array()) bad(where, "'rules' must be an array");
        for (std::size_t i = 0; i < rules.size(); ++i) {
            auto& r = rules[i];
            const auto rw = where + ".rules[" + std::to_string(i) + "]";
            only_keys(r, {"fingerprint", "contains_all", "contains_none", "response", "response_file"}, rw);
            if (r.contains("response") == r.contains("response_file")) {
                bad(rw, "exactly one of 'response' and 'response_file' is required");
            }
            if (r.contains("response_file")) {
                // Inline the file so the config hash covers the script.
                r["response"] = read_text(base / get_string(r, "response_file", rw));
                r.erase("response_file");
            }
            get_string(r, "response", rw);
            if (r.contains("fingerprint")) get_string(r, "fingerprint", rw);
            string_list(r, "contains_all", rw);
            string_list(r, "contains_none", rw);
        }
    } else if (kind == "http") {
        only_keys(def, {"kind", "endpoint_url", "auth_token_env", "model", "timeout_ms"}, where);
        get_string(def, "endpoint_url", where);
        get_string(def, "model", where);
        get_or<std::string>(def, "auth_token_env", "", where);
        get_count(def, "timeout_ms", 60000, 1, where);
    } else {
        bad(where, "unknown backend kind '" + kind + "'");
    }
}

void normalize(json& doc) {
    only_keys(doc, {"backends", "roles", "retrieval", "pipeline", "eval"}, "config");
    if (!doc.contains("backends")) bad("config", "missing 'backends'");
    if (!doc.contains("roles")) bad("config", "missing 'roles'");

    auto& roles = doc["roles"];
    only_keys(roles, {"detector", "extractor", "judge", "translator", "consis"}, "roles");
    for (auto it = roles.begin(); it != roles.end(); ++it) {
        if (!it->is_string()) bad("roles", "'" + it.key() + "' must name a backend");
        if (!doc["backends"].contains(it->get<std::string>())) {
            bad("roles", "'" + it.key() + "' names undefined backend '" + it->get<std::string>() + "'");
        }
    }
    if (!roles.contains("translator")) bad("roles", "missing 'translator'");

    auto& retrieval = doc["retrieval"];
    if (retrieval.is_null()) retrieval = json::object();
    only_keys(retrieval, {"sources", "k_per_source", "max_documents"}, "retrieval");
    get_count(retrieval, "k_per_source", kDefaultMaxDocuments, 0, "retrieval");
    get_count(retrieval, "max_documents", kDefaultMaxDocuments, 1, "retrieval");
    auto& sources = retrieval["sources"];
    if (sources.is_null()) sources = json::array();
    if (!sources.is_array()) bad("retrieval", "'sources' must be an array");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        auto& s = sources[i];
        const auto where = "retrieval.sources[" + std::to_string(i) + "]";
        const auto kind = get_string(s, "kind", where);
        if (kind == "local_index") {
            only_keys(s, {"kind", "path"}, where);
            get_string(s, "path", where);
        } else if (kind == "glossary") {
            only_keys(s, {"kind", "path", "name"}, where);
            get_string(s, "path", where);
            get_or<std::string>(s, "name", "glossary", where);
        } else if (kind == "remote") {
            only_keys(s, {"kind", "endpoint_url", "timeout_ms"}, where);
            get_string(s, "endpoint_url", where);
            get_count(s, "timeout_ms", 10000, 1, where);
        } else {
            bad(where, "unknown source kind '" + kind + "'");
        }
    }

    auto& p = doc["pipeline"];
    if (p.is_null()) p = json::object();
    only_keys(p, {"mode", "temperature", "max_new_tokens", "max_new_tokens_ceiling", "budget", "on_detector_error",
                  "width", "judge_width", "cache_dir", "retry"},
              "pipeline");
    if (!parse_pipeline_mode(get_or<std::string>(p, "mode", "crat", "pipeline"))) {
        bad("pipeline", "mode must be crat, unrefined_kg or direct");
    }
    const auto temperature = get_or<double>(p, "temperature", 0.0, "pipeline");
    if (temperature < 0.0 || temperature > 2.0) bad("pipeline", "temperature must be within [0, 2]");
    const auto ceiling = get_count(p, "max_new_tokens_ceiling", kDefaultMaxNewTokens, 1, "pipeline");
    const auto max_new = get_count(p, "max_new_tokens", ceiling, 1, "pipeline");
    if (max_new > ceiling) bad("pipeline", "max_new_tokens exceeds max_new_tokens_ceiling");
    const auto fallback = get_or<std::string>(p, "on_detector_error", "translate_direct", "pipeline");
    if (fallback != "fail" && fallback != "translate_direct") {
        bad("pipeline", "on_detector_error must be fail or translate_direct");
    }
    get_count(p, "width", 1, 1, "pipeline");
    get_count(p, "judge_width", 1, 1, "pipeline");
    if (!p.contains("cache_dir")) p["cache_dir"] = nullptr;
    if (!p["cache_dir"].is_null() && !p["cache_dir"].is_string()) bad("pipeline", "cache_dir must be a path or null");
    auto& budget = p["budget"];
    if (budget.is_null()) budget = json::object();
    only_keys(budget, {"max_triples", "max_excerpts", "max_excerpt_chars"}, "pipeline.budget");
    const KnowledgeBudget defaults;
    get_count(budget, "max_triples", defaults.max_triples, 0, "pipeline.budget");
    get_count(budget, "max_excerpts", defaults.max_excerpts, 0, "pipeline.budget");
    get_count(budget, "max_excerpt_chars", defaults.max_excerpt_chars, 1, "pipeline.budget");
    auto& retry = p["retry"];
    if (retry.is_null()) retry = json::object();
    only_keys(retry, {"max_attempts", "base_delay_ms"}, "pipeline.retry");
    get_count(retry, "max_attempts", 3, 1, "pipeline.retry");
    get_count(retry, "base_delay_ms", 250, 0, "pipeline.retry");

    auto& e = doc["eval"];
    if (e.is_null()) e = json::object();
    only_keys(e, {"term_consistency", "consis", "external_scores"}, "eval");
    get_or<bool>(e, "term_consistency", true, "eval");
    if (get_or<bool>(e, "consis", roles.contains("consis"), "eval") && !roles.contains("consis")) {
        bad("eval", "consis enabled but roles.consis is not set");
    }
    if (e.contains("external_scores")) get_string(e, "external_scores", "eval");
}

}  // namespace

std::string RunConfig::config_hash() const {
    // Output-neutral knobs stay out of the hash.
    json h = document;
    h["pipeline"].erase("cache_dir");
    h["pipeline"].erase("width");
    h["pipeline"].erase("judge_width");
    h["pipeline"].erase("retry");
    return text::sha256_hex(h.dump());
}

std::string RunConfig::role(std::string_view name) const {
    const auto& roles = document.at("roles");
    auto it = roles.find(std::string(name));
    return it == roles.end() ? std::string{} : it->get<std::string>();
}

void RunConfig::set_mode(PipelineMode mode) {
    document["pipeline"]["mode"] = std::string(to_string(mode));
    normalize(document);
}

void RunConfig::set_width(std::size_t width) {
    document["pipeline"]["width"] = width;
    normalize(document);
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
    RunConfig c;
    try {
        c.document = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what(), e.byte);
    }
    c.base_dir = base_dir;
    if (!c.document.is_object()) bad("config", "expected an object");
    auto& backends = c.document["backends"];
    if (!backends.is_object()) bad("config", "'backends' must be an object");
    for (auto it = backends.begin(); it != backends.end(); ++it) normalize_backend(it.key(), it.value(), base_dir);
    normalize(c.document);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_text(path), path.parent_path());
}

ChatParams chat_params(const RunConfig& config) {
    const auto& p = config.document.at("pipeline");
    ChatParams params;
    params.temperature = p.at("temperature").get<double>();
    params.max_new_tokens = p.at("max_new_tokens").get<int>();
    return params;
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config, bool use_cache) {
    const auto& p = config.document.at("pipeline");
    GatewayOptions options;
    options.max_new_tokens_ceiling = p.at("max_new_tokens_ceiling").get<int>();
    options.retry.max_attempts = p.at("retry").at("max_attempts").get<int>();
    options.retry.base_delay = std::chrono::milliseconds(p.at("retry").at("base_delay_ms").get<std::int64_t>());
    if (use_cache && p.at("cache_dir").is_string()) options.cache_dir = config.base_dir / p.at("cache_dir").get<std::string>();
    auto gateway = std::make_unique<Gateway>(options);

    const auto& backends = config.document.at("backends");
    for (auto it = backends.begin(); it != backends.end(); ++it) {
        const auto& def = it.value();
        if (def.at("kind") == "mock") {
            std::vector<MockRule> rules;
            for (const auto& r : def.at("rules")) {
                MockRule rule;
                if (r.contains("fingerprint")) rule.fingerprint = r.at("fingerprint").get<std::string>();
                rule.contains_all = r.value("contains_all", std::vector<std::string>{});
                rule.contains_none = r.value("contains_none", std::vector<std::string>{});
                rule.response = r.at("response").get<std::string>();
                rules.push_back(std::move(rule));
            }
            MockFallback fallback = def.at("fallback") == "echo_last_user" ? echo_last_user() : MockFallback{};
            gateway->register_mock(it.key(), std::move(rules), std::move(fallback));
        } else {
            HttpBackendConfig http;
            http.endpoint_url = def.at("endpoint_url").get<std::string>();
            http.auth_token_env_var = def.at("auth_token_env").get<std::string>();
            http.model_name = def.at("model").get<std::string>();
            http.timeout = std::chrono::milliseconds(def.at("timeout_ms").get<std::int64_t>());
            gateway->register_http(it.key(), std::move(http));
        }
    }
    return gateway;
}

PipelineConfig make_pipeline_config(const RunConfig& config) {
    const auto& doc = config.document;
    const auto& p = doc.at("pipeline");
    const auto& r = doc.at("retrieval");

    PipelineConfig pc;
    pc.backends = {config.role("detector"), config.role("extractor"), config.role("judge"), config.role("translator")};
    pc.params = chat_params(config);
    pc.k_per_source = r.at("k_per_source").get<std::size_t>();
    pc.max_documents = r.at("max_documents").get<std::size_t>();
    pc.budget.max_triples = p.at("budget").at("max_triples").get<std::size_t>();
    pc.budget.max_excerpts = p.at("budget").at("max_excerpts").get<std::size_t>();
    pc.budget.max_excerpt_chars = p.at("budget").at("max_excerpt_chars").get<std::size_t>();
    pc.on_detector_error =
        p.at("on_detector_error") == "fail" ? DetectorFallback::fail : DetectorFallback::translate_direct;
    pc.mode = *parse_pipeline_mode(p.at("mode").get<std::string>());
    pc.batch_width = p.at("width").get<std::size_t>();
    pc.judge_width = p.at("judge_width").get<std::size_t>();
    pc.config_hash = config.config_hash();

    for (const auto& s : r.at("sources")) {
        const auto kind = s.at("kind").get<std::string>();
        if (kind == "local_index") {
            auto index = std::make_shared<const CorpusIndex>(load_index(config.base_dir / s.at("path").get<std::string>()));
            pc.sources.push_back(std::make_shared<LocalIndexSource>(std::move(index)));
        } else if (kind == "glossary") {
            pc.sources.push_back(std::make_shared<GlossarySource>(
                load_glossary_tsv(config.base_dir / s.at("path").get<std::string>()), s.at("name").get<std::string>()));
        } else {
            RemoteSearchConfig rc{s.at("endpoint_url").get<std::string>(),
                                  std::chrono::milliseconds(s.at("timeout_ms").get<std::int64_t>())};
            pc.sources.push_back(std::make_shared<RemoteSearchSource>(std::move(rc)));
        }
    }
    return pc;
}

EvalSettings eval_settings(const RunConfig& config) {
    const auto& e = config.document.at("eval");
    EvalSettings s;
    s.term_consistency = e.at("term_consistency").get<bool>();
    if (e.at("consis").get<bool>()) s.consis_backend = config.role("consis");
    if (e.contains("external_scores")) s.external_scores = config.base_dir / e.at("external_scores").get<std::string>();
    return s;
}

}  // namespace crat::cli
