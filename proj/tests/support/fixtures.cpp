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

#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "crat/cli/commands.hpp"
#include "crat/cli/run_config.hpp"
#include "crat/retrieval.hpp"

namespace crat::test {

using nlohmann::json;

fs::path data_dir() { return CRAT_TEST_DATA_DIR; }
fs::path golden_dir() { return CRAT_GOLDEN_DIR; }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
}

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    for (;;) {
        auto candidate = fs::temp_directory_path() /
                         ("crat-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        if (fs::create_directory(candidate)) {
            path_ = candidate;
            return;
        }
    }
}

TempDir::~TempDir() {
    if (path_.empty()) return;
    std::error_code ec;
    fs::remove_all(path_, ec);
}

TempDir::TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)) { other.path_.clear(); }

std::string golden_mismatch(const std::string& name, const std::string& actual) {
    const auto path = golden_dir() / name;
    if (const char* update = std::getenv("CRAT_UPDATE_GOLDEN"); update && std::string(update) == "1") {
        write_file(path, actual);
        return {};
    }
    if (!fs::exists(path)) return "missing golden file " + path.string();
    const auto expected = read_file(path);
    if (expected == actual) return {};
    std::size_t at = 0;
    while (at < expected.size() && at < actual.size() && expected[at] == actual[at]) ++at;
    return name + " differs at byte " + std::to_string(at) + ": expected '" + expected.substr(at, 60) +
           "' got '" + actual.substr(at, 60) + "'";
}

std::string block(const json& payload) { return "```json\n" + payload.dump() + "\n```"; }

std::string detector_reply(const std::vector<std::pair<std::string, std::string>>& terms) {
    json arr = json::array();
    for (const auto& [s, c] : terms) arr.push_back({{"surface", s}, {"category", c}, {"rationale", "scripted"}});
    return block({{"terms", arr}});
}

std::string extractor_reply(
    const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& triples) {
    json arr = json::array();
    for (const auto& [s, r, o, t] : triples) {
        arr.push_back({{"subject", s}, {"relation", r}, {"object", o}, {"terms", {t}}});
    }
    return block({{"triples", arr}});
}

std::string judge_reply(bool correct, const std::vector<std::tuple<std::string, std::string, std::string>>& triples) {
    json arr = json::array();
    for (const auto& [s, r, o] : triples) arr.push_back({{"subject", s}, {"relation", r}, {"object", o}});
    return block({{"proposed_rendering", "x"},
                  {"back_translation", "x"},
                  {"alignment_rationale", correct ? "meaning kept" : "meaning changed"},
                  {"verdict", correct ? "CORRECT" : "INCORRECT"},
                  {"triples", arr}});
}

std::string translator_reply(const std::string& translation,
                             const std::map<std::string, std::vector<std::string>>& renderings) {
    return block({{"translation", translation}, {"term_renderings", renderings}});
}

ScotiaWorkspace make_scotia_workspace() {
    ScotiaWorkspace ws;
    for (const auto& entry : fs::directory_iterator(data_dir() / "scotia")) {
        fs::copy(entry.path(), ws.dir.path() / entry.path().filename());
    }
    save_index(build_index(load_corpus_jsonl(ws.dir / "corpus.jsonl")), ws.dir / "index.json");
    ws.config = ws.dir / "config.json";
    auto trim_newline = [](std::string s) {
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
        return s;
    };
    ws.geo_text = trim_newline(read_file(ws.dir / "geo.txt"));
    ws.fin_text = trim_newline(read_file(ws.dir / "fin.txt"));
    return ws;
}

TranslationResult run_scotia(const ScotiaWorkspace& ws, PipelineMode mode, const std::string& doc_id,
                           const std::string& text, const std::optional<fs::path>& cache_dir) {
    auto cfg = cli::load_run_config(ws.config);
    if (cache_dir) cfg.document["pipeline"]["cache_dir"] = cache_dir->string();
    cfg.set_mode(mode);
    auto gateway = cli::make_gateway(cfg, cache_dir.has_value());
    return run_pipeline(*gateway, doc_id, text, {"en", "zh"}, cli::make_pipeline_config(cfg));
}

CliRun run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

TransKG random_graph(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {"bank", "Scotia", "phin", "Gaemi", "Luzon", "F.B.I", "canal",
                                                   "river", "银行", "河岸", "a \"quoted\" term", "tab\tterm"};
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    std::string source;
    std::vector<TermCandidate> terms;
    const auto n_terms = pick(6) + 1;
    for (std::size_t i = 0; i < n_terms; ++i) {
        const auto& w = words[pick(words.size())];
        const auto start = source.size();
        source += w + " ";
        terms.push_back({w, {start, start + w.size()}, static_cast<TermCategory>(pick(5)), "r"});
    }
    auto graph = new_graph("doc-" + std::to_string(pick(1000)), terms);
    std::vector<std::string> keys;
    for (const auto& [k, _] : graph.nodes()) keys.push_back(k);

    std::vector<KnowledgeTriple> internal;
    for (std::size_t i = 0, n = pick(5); i < n; ++i) {
        KnowledgeTriple t{words[pick(words.size())], "rel" + std::to_string(pick(4)), words[pick(words.size())],
                          Provenance::internal(), {keys[pick(keys.size())]}};
        if (pick(2)) t.term_keys.insert(keys[pick(keys.size())]);
        internal.push_back(std::move(t));
    }
    graph = add_internal(graph, internal);
    for (std::size_t d = 0, n = pick(5); d < n; ++d) {
        RetrievedDocument doc{"d" + std::to_string(pick(8)), "t", "text", DocumentSource::local_index, 1.0};
        const bool ok = pick(2) == 0;
        std::vector<KnowledgeTriple> ext;
        if (ok) {
            for (std::size_t i = 0, m = pick(3); i < m; ++i) {
                ext.push_back({words[pick(words.size())], "is", words[pick(words.size())],
                               Provenance::external(doc.id), {keys[pick(keys.size())]}});
            }
        }
        graph = integrate_external(graph, doc, {doc.id, ok ? Verdict::correct : Verdict::incorrect, "", "", ""}, ext);
    }
    return graph;
}

}  // namespace crat::test

namespace crat::test {

std::vector<RetrievedDocument> MapSource::fetch(const RetrievalQuery& query, std::size_t k) {
    auto it = by_term_.find(query.term);
    if (it == by_term_.end()) return {};
    auto out = it->second;
    if (out.size() > k) out.resize(k);
    return out;
}

Scenario make_random_scenario(std::mt19937_64& rng, PipelineMode mode) {
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    Scenario s;
    s.gateway = std::make_unique<Gateway>();

    const auto n_terms = pick(0, 6);
    std::vector<std::string> terms;
    s.source = "Report:";
    for (std::size_t i = 0; i < n_terms; ++i) {
        terms.push_back("kappa" + std::to_string(i));
        s.source += " the " + terms.back() + " moved";
    }
    s.source += ".";
    std::vector<std::pair<std::string, std::string>> detected;
    for (const auto& t : terms) detected.emplace_back(t, "new_term");

    std::map<std::string, std::vector<RetrievedDocument>> by_term;
    std::vector<MockRule> judge_rules;
    const auto n_docs = n_terms == 0 ? 0 : pick(0, 8);
    for (std::size_t d = 0; d < n_docs; ++d) {
        RetrievedDocument doc{"doc" + std::to_string(d), "Title " + std::to_string(d), "Body of doc " + std::to_string(d),
                              DocumentSource::local_index, 1.0};
        by_term[terms[pick(0, n_terms - 1)]].push_back(doc);
        if (pick(0, 3) == 0) {  // occasionally evidence for a second term too
            auto& other = by_term[terms[pick(0, n_terms - 1)]];
            if (std::none_of(other.begin(), other.end(), [&](const auto& o) { return o.id == doc.id; })) {
                other.push_back(doc);
            }
        }
    }
    std::set<std::string> accepted_seen;
    for (const auto& t : terms) {
        for (const auto& doc : by_term[t]) {
            const bool ok = pick(0, 1) == 0;
            MockRule r;
            r.contains_all = {"the term \"" + t + "\"", "Retrieved document [" + doc.id + "]"};
            r.response = judge_reply(ok, {{t, "described by", doc.id}});
            judge_rules.push_back(std::move(r));
            s.judging_order.emplace_back(t, doc.id);
            if ((ok || mode == PipelineMode::unrefined_kg) && accepted_seen.insert(doc.id).second) {
                s.expected_accepted.push_back(doc.id);
            }
        }
    }

    s.gateway->register_mock("detector", {MockRule::containing("", detector_reply(detected))});
    s.gateway->register_mock("extractor", {MockRule::containing("", extractor_reply({}))});
    s.gateway->register_mock("judge", std::move(judge_rules));
    s.gateway->register_mock("translator", {MockRule::containing("", translator_reply("译文", {}))});

    s.config.backends = {"detector", "extractor", "judge", "translator"};
    s.config.sources = {std::make_shared<MapSource>(std::move(by_term))};
    s.config.k_per_source = 8;
    s.config.max_documents = 8;
    s.config.mode = mode;
    s.config.judge_width = pick(1, 4);
    return s;
}

}  // namespace crat::test
