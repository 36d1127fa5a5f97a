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

#include "crat/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

#include "crat/error.hpp"
#include "crat/text.hpp"
#include "json_util.hpp"

namespace crat {

using nlohmann::json;

std::string_view to_string(Stage s) noexcept {
    switch (s) {
    case Stage::detect: return "detect";
    case Stage::extract: return "extract";
    case Stage::retrieve: return "retrieve";
    case Stage::judge: return "judge";
    case Stage::translate: return "translate";
    }
    return "detect";
}

std::string_view to_string(PipelineMode m) noexcept {
    switch (m) {
    case PipelineMode::crat: return "crat";
    case PipelineMode::unrefined_kg: return "unrefined_kg";
    case PipelineMode::direct: return "direct";
    }
    return "crat";
}

std::optional<PipelineMode> parse_pipeline_mode(std::string_view s) noexcept {
    for (auto m : {PipelineMode::crat, PipelineMode::unrefined_kg, PipelineMode::direct}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

namespace {

std::optional<Stage> parse_stage(std::string_view s) {
    for (auto st : {Stage::detect, Stage::extract, Stage::retrieve, Stage::judge, Stage::translate}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

class StageTimer {
public:
    StageTimer(TranslationResult& result, Stage stage)
        : result_(result), stage_(stage), start_(std::chrono::steady_clock::now()) {
        result_.transcript.stages.push_back({stage, {}, {}, {}});
    }
    ~StageTimer() {
        result_.timings_ms[std::string(to_string(stage_))] =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_)
                .count();
    }
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

    void absorb(CallLog&& log) {
        auto& rec = result_.transcript.stages.back();
        std::move(log.exchanges.begin(), log.exchanges.end(), std::back_inserter(rec.exchanges));
        std::move(log.envelopes.begin(), log.envelopes.end(), std::back_inserter(rec.envelopes));
        std::move(log.warnings.begin(), log.warnings.end(), std::back_inserter(rec.warnings));
    }
    void warn(std::string w) { result_.transcript.stages.back().warnings.push_back(std::move(w)); }

private:
    TranslationResult& result_;
    Stage stage_;
    std::chrono::steady_clock::time_point start_;
};

struct JudgeTask {
    std::size_t term_index;
    std::string doc_id;
};

json term_to_json(const TermCandidate& t) {
    return {{"surface", t.surface},
            {"span", {t.span.start, t.span.end}},
            {"category", to_string(t.category)},
            {"rationale", t.rationale}};
}

TermCandidate term_from_json(const json& j) {
    TermCandidate t;
    t.surface = detail::require_string(j, "surface", "term");
    const auto& sp = detail::require(j, "span", "term");
    t.span = {sp.at(0).get<std::size_t>(), sp.at(1).get<std::size_t>()};
    const auto cat = parse_term_category(detail::require_string(j, "category", "term"));
    if (!cat) detail::schema_error("term", "unknown category");
    t.category = *cat;
    t.rationale = detail::require_string(j, "rationale", "term");
    return t;
}

json doc_to_json(const RetrievedDocument& d) {
    return {{"id", d.id}, {"title", d.title}, {"text", d.text}, {"source", to_string(d.source)}, {"score", d.score}};
}

RetrievedDocument doc_from_json(const json& j) {
    RetrievedDocument d;
    d.id = detail::require_string(j, "id", "document");
    d.title = detail::require_string(j, "title", "document");
    d.text = detail::require_string(j, "text", "document");
    const auto src = parse_document_source(detail::require_string(j, "source", "document"));
    if (!src) detail::schema_error("document", "unknown source");
    d.source = *src;
    d.score = detail::require(j, "score", "document").get<double>();
    return d;
}

json verdict_to_json(const JudgeVerdict& v) {
    return {{"doc_id", v.doc_id},
            {"verdict", to_string(v.verdict)},
            {"proposed_rendering", v.proposed_rendering},
            {"back_translation", v.back_translation},
            {"alignment_rationale", v.alignment_rationale}};
}

JudgeVerdict verdict_from_json(const json& j) {
    JudgeVerdict v;
    v.doc_id = detail::require_string(j, "doc_id", "verdict");
    const auto s = detail::require_string(j, "verdict", "verdict");
    if (s != "CORRECT" && s != "INCORRECT") detail::schema_error("verdict", "unknown verdict");
    v.verdict = s == "CORRECT" ? Verdict::correct : Verdict::incorrect;
    v.proposed_rendering = detail::require_string(j, "proposed_rendering", "verdict");
    v.back_translation = detail::require_string(j, "back_translation", "verdict");
    v.alignment_rationale = detail::require_string(j, "alignment_rationale", "verdict");
    return v;
}

std::optional<AgentKind> parse_agent_kind(std::string_view s) {
    for (auto a : {AgentKind::detector, AgentKind::extractor, AgentKind::judge, AgentKind::translator,
                   AgentKind::consis}) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

void write_atomically(const std::filesystem::path& path, const std::string& bytes) {
    static std::atomic<unsigned> counter{0};
    std::ostringstream name;
    name << path.filename().string() << ".tmp." << std::this_thread::get_id() << "." << counter++;
    const auto tmp = path.parent_path() / name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
        out << bytes;
        out.flush();
        if (!out) throw Error(ErrorKind::io, "short write on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::io, "cannot replace " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

// ---- config ------------------------------------------------------------------

void validate_config(const PipelineConfig& config, const Gateway& gateway) {
    auto need = [&](const std::string& role, const std::string& id) {
        if (id.empty()) throw Error(ErrorKind::configuration, "no backend configured for " + role);
        if (!gateway.has_backend(id)) {
            throw Error(ErrorKind::configuration, role + " backend '" + id + "' is not registered");
        }
    };
    need("translator", config.backends.translator);
    if (config.mode != PipelineMode::direct) {
        need("detector", config.backends.detector);
        need("extractor", config.backends.extractor);
        if (config.mode == PipelineMode::crat) need("judge", config.backends.judge);
    }
    if (config.max_documents < 1) throw Error(ErrorKind::configuration, "max_documents (N2) must be >= 1");
    if (config.batch_width < 1) throw Error(ErrorKind::configuration, "batch width must be >= 1");
    if (config.judge_width < 1) throw Error(ErrorKind::configuration, "judge width must be >= 1");
    if (config.params.max_new_tokens > gateway.options().max_new_tokens_ceiling) {
        throw Error(ErrorKind::configuration, "max_new_tokens exceeds the gateway ceiling");
    }
}

std::string pipeline_config_hash(const PipelineConfig& c) {
    json sources = json::array();
    for (const auto& s : c.sources) sources.push_back(to_string(s->kind()));
    const json j = {{"backends",
                     {{"detector", c.backends.detector},
                      {"extractor", c.backends.extractor},
                      {"judge", c.backends.judge},
                      {"translator", c.backends.translator}}},
                    {"temperature", c.params.temperature},
                    {"max_new_tokens", c.params.max_new_tokens},
                    {"sources", sources},
                    {"k_per_source", c.k_per_source},
                    {"max_documents", c.max_documents},
                    {"budget",
                     {{"max_triples", c.budget.max_triples},
                      {"max_excerpts", c.budget.max_excerpts},
                      {"max_excerpt_chars", c.budget.max_excerpt_chars}}},
                    {"on_detector_error", c.on_detector_error == DetectorFallback::fail ? "fail" : "translate_direct"},
                    {"mode", to_string(c.mode)}};
    return text::sha256_hex(j.dump());
}

// ---- transcript ----------------------------------------------------------------

std::vector<Stage> AgentTranscript::stage_sequence() const {
    std::vector<Stage> out;
    for (const auto& s : stages) out.push_back(s.stage);
    return out;
}

std::size_t AgentTranscript::exchange_count() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.exchanges.size();
    return n;
}

json transcript_to_json(const AgentTranscript& transcript, bool include_timings) {
    json stages = json::array();
    for (const auto& s : transcript.stages) {
        json exchanges = json::array();
        for (const auto& ex : s.exchanges) {
            json e = {{"fingerprint", ex.fingerprint},
                      {"request", request_to_json(ex.request)},
                      {"response_text", ex.response_text}};
            if (include_timings) {
                e["attempts"] = ex.attempts;
                e["latency_ms"] = ex.latency_ms;
                e["cache_hit"] = ex.cache_hit;
            }
            exchanges.push_back(std::move(e));
        }
        json envelopes = json::array();
        for (const auto& env : s.envelopes) {
            envelopes.push_back({{"agent", to_string(env.agent)},
                                 {"repair_attempts", env.repair_attempts},
                                 {"parsed", env.parsed ? *env.parsed : json(nullptr)},
                                 {"parse_error", env.parse_error}});
        }
        stages.push_back({{"stage", to_string(s.stage)},
                          {"exchanges", exchanges},
                          {"envelopes", envelopes},
                          {"warnings", s.warnings}});
    }
    return {{"stages", stages}};
}

AgentTranscript transcript_from_json(const json& j) {
    AgentTranscript t;
    for (const auto& sj : detail::require_array(j, "stages", "transcript")) {
        StageRecord rec;
        const auto st = parse_stage(detail::require_string(sj, "stage", "stage"));
        if (!st) detail::schema_error("stage", "unknown stage");
        rec.stage = *st;
        for (const auto& ej : detail::require_array(sj, "exchanges", "stage")) {
            ChatExchange ex;
            ex.fingerprint = detail::require_string(ej, "fingerprint", "exchange");
            ex.request = request_from_json(detail::require(ej, "request", "exchange"));
            ex.response_text = detail::require_string(ej, "response_text", "exchange");
            if (ej.contains("attempts")) ex.attempts = ej["attempts"].get<int>();
            if (ej.contains("latency_ms")) ex.latency_ms = ej["latency_ms"].get<std::int64_t>();
            if (ej.contains("cache_hit")) ex.cache_hit = ej["cache_hit"].get<bool>();
            rec.exchanges.push_back(std::move(ex));
        }
        for (const auto& envj : detail::require_array(sj, "envelopes", "stage")) {
            AgentOutputEnvelope env;
            const auto kind = parse_agent_kind(detail::require_string(envj, "agent", "envelope"));
            if (!kind) detail::schema_error("envelope", "unknown agent");
            env.agent = *kind;
            env.repair_attempts = detail::require(envj, "repair_attempts", "envelope").get<int>();
            if (!envj.at("parsed").is_null()) env.parsed = envj["parsed"];
            env.parse_error = detail::require_string(envj, "parse_error", "envelope");
            // raw text lives in the exchanges
            if (!rec.exchanges.empty()) env.raw_text = rec.exchanges.back().response_text;
            rec.envelopes.push_back(std::move(env));
        }
        for (const auto& w : detail::require_array(sj, "warnings", "stage")) rec.warnings.push_back(w.get<std::string>());
        t.stages.push_back(std::move(rec));
    }
    return t;
}

// ---- result serialization ---------------------------------------------------------

json result_to_json(const TranslationResult& r, bool include_timings) {
    json terms = json::array();
    for (const auto& t : r.terms) terms.push_back(term_to_json(t));
    json docs = json::array();
    for (const auto& d : r.documents) docs.push_back(doc_to_json(d));
    json judgments = json::array();
    for (const auto& jr : r.judgments) {
        judgments.push_back({{"term", jr.term},
                             {"doc_id", jr.doc_id},
                             {"judged_by_model", jr.judged_by_model},
                             {"verdict", verdict_to_json(jr.verdict)}});
    }
    json out = {{"source_doc_id", r.source_doc_id},
                {"source_text", r.source_text},
                {"source_lang", r.langs.source},
                {"target_lang", r.langs.target},
                {"mode", to_string(r.mode)},
                {"target_text", r.target_text},
                {"terms", terms},
                {"documents", docs},
                {"judgments", judgments},
                {"graph", graph_to_json(r.graph)},
                {"term_renderings", r.term_renderings ? json(*r.term_renderings) : json(nullptr)},
                {"transcript", transcript_to_json(r.transcript, include_timings)},
                {"term_count", r.term_count},
                {"judged_count", r.judged_count},
                {"accepted_count", r.accepted_count},
                {"detector_fallback", r.detector_fallback}};
    if (include_timings) out["timings_ms"] = r.timings_ms;
    return out;
}

TranslationResult result_from_json(const json& j) {
    constexpr std::string_view where = "result";
    TranslationResult r;
    r.source_doc_id = detail::require_string(j, "source_doc_id", where);
    r.source_text = detail::require_string(j, "source_text", where);
    r.langs = {detail::require_string(j, "source_lang", where), detail::require_string(j, "target_lang", where)};
    const auto mode = parse_pipeline_mode(detail::require_string(j, "mode", where));
    if (!mode) detail::schema_error(where, "unknown mode");
    r.mode = *mode;
    r.target_text = detail::require_string(j, "target_text", where);
    for (const auto& t : detail::require_array(j, "terms", where)) r.terms.push_back(term_from_json(t));
    for (const auto& d : detail::require_array(j, "documents", where)) r.documents.push_back(doc_from_json(d));
    for (const auto& jr : detail::require_array(j, "judgments", where)) {
        r.judgments.push_back({detail::require_string(jr, "term", "judgment"),
                               detail::require_string(jr, "doc_id", "judgment"),
                               verdict_from_json(detail::require(jr, "verdict", "judgment")),
                               detail::require(jr, "judged_by_model", "judgment").get<bool>()});
    }
    r.graph = graph_from_json(detail::require(j, "graph", where));
    const auto& tr = detail::require(j, "term_renderings", where);
    if (!tr.is_null()) r.term_renderings = tr.get<std::map<std::string, std::vector<std::string>>>();
    r.transcript = transcript_from_json(detail::require(j, "transcript", where));
    r.term_count = detail::require(j, "term_count", where).get<std::size_t>();
    r.judged_count = detail::require(j, "judged_count", where).get<std::size_t>();
    r.accepted_count = detail::require(j, "accepted_count", where).get<std::size_t>();
    r.detector_fallback = detail::require(j, "detector_fallback", where).get<bool>();
    if (j.contains("timings_ms")) r.timings_ms = j["timings_ms"].get<std::map<std::string, std::int64_t>>();
    return r;
}

std::string serialize_result(const TranslationResult& result, bool include_timings) {
    return detail::canonical_dump(result_to_json(result, include_timings));
}

// ---- run ---------------------------------------------------------------------------

TranslationResult run_pipeline(Gateway& gateway, std::string source_doc_id, std::string_view source_text,
                               const LangPair& langs, const PipelineConfig& config) {
    validate_config(config, gateway);
    if (text::trim(source_text).empty()) {
        throw Error(ErrorKind::invalid_argument, "source document '" + source_doc_id + "' is empty");
    }

    TranslationResult result;
    result.source_doc_id = source_doc_id;
    result.source_text = std::string(source_text);
    result.langs = langs;
    result.mode = config.mode;
    result.graph = new_graph(source_doc_id, {});

    auto call_for = [&](const std::string& backend) { return AgentCall{&gateway, backend, config.params}; };

    if (config.mode != PipelineMode::direct) {
        // detect
        {
            StageTimer stage(result, Stage::detect);
            CallLog log;
            try {
                result.terms = detect_unknown_terms(source_text, langs, call_for(config.backends.detector), log);
            } catch (const Error& e) {
                stage.absorb(std::move(log));
                if (config.on_detector_error == DetectorFallback::fail) throw;
                stage.warn(std::string("detector failed, translating directly: ") + e.what());
                result.detector_fallback = true;
                result.terms.clear();
            }
            if (!result.detector_fallback) stage.absorb(std::move(log));
        }
        result.term_count = result.terms.size();
        result.graph = new_graph(source_doc_id, result.terms);

        if (!result.terms.empty()) {
            // extract
            {
                StageTimer stage(result, Stage::extract);
                CallLog log;
                std::vector<KnowledgeTriple> internal;
                try {
                    internal = extract_internal_knowledge(source_text, result.terms, langs,
                                                          call_for(config.backends.extractor), log);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::extraction) throw;
                    log.warnings.push_back(std::string("continuing without internal knowledge: ") + e.what());
                }
                stage.absorb(std::move(log));
                result.graph = add_internal(result.graph, internal);
            }

            // retrieve
            std::vector<JudgeTask> tasks;
            {
                StageTimer stage(result, Stage::retrieve);
                for (std::size_t ti = 0; ti < result.terms.size(); ++ti) {
                    std::vector<std::string> warnings;
                    auto docs = retrieve_for_term(result.terms[ti], source_text, config.sources,
                                                  config.k_per_source, config.max_documents, warnings);
                    for (auto& w : warnings) stage.warn(std::move(w));
                    for (auto& d : docs) {
                        auto known = std::find_if(result.documents.begin(), result.documents.end(),
                                                  [&](const RetrievedDocument& o) { return o.id == d.id; });
                        if (known != result.documents.end() && (known->source != d.source || known->text != d.text)) {
                            // Same id from a different source: keep both apart.
                            d.id = std::string(to_string(d.source)) + ":" + d.id;
                            known = std::find_if(result.documents.begin(), result.documents.end(),
                                                 [&](const RetrievedDocument& o) { return o.id == d.id; });
                        }
                        if (known == result.documents.end()) result.documents.push_back(d);
                        tasks.push_back({ti, d.id});
                    }
                }
                if (config.mode == PipelineMode::unrefined_kg) {
                    for (const auto& task : tasks) {
                        const auto& doc = *std::find_if(result.documents.begin(), result.documents.end(),
                                                        [&](const auto& o) { return o.id == task.doc_id; });
                        JudgeVerdict pass{doc.id, Verdict::correct, "", "", "admitted without judging"};
                        result.graph = integrate_external(result.graph, doc, pass, {});
                        result.judgments.push_back({result.terms[task.term_index].surface, doc.id, pass, false});
                    }
                }
            }

            // judge + integrate
            if (config.mode == PipelineMode::crat && !tasks.empty()) {
                StageTimer stage(result, Stage::judge);
                std::vector<KnowledgeTriple> internal(result.graph.triples().begin(), result.graph.triples().end());
                const auto doc_of = [&](const std::string& id) -> const RetrievedDocument& {
                    return *std::find_if(result.documents.begin(), result.documents.end(),
                                         [&](const auto& o) { return o.id == id; });
                };
                auto judge_one = [&](const JudgeTask& task, CallLog& log) {
                    return judge_document(internal, doc_of(task.doc_id), source_text, result.terms[task.term_index],
                                          langs, call_for(config.backends.judge), log);
                };
                std::vector<JudgeOutcome> outcomes(tasks.size());
                std::vector<CallLog> logs(tasks.size());
                for (std::size_t begin = 0; begin < tasks.size(); begin += config.judge_width) {
                    const auto end = std::min(tasks.size(), begin + config.judge_width);
                    if (end - begin == 1) {
                        outcomes[begin] = judge_one(tasks[begin], logs[begin]);
                        continue;
                    }
                    std::vector<std::future<JudgeOutcome>> futures;
                    for (auto i = begin; i < end; ++i) {
                        futures.push_back(std::async(std::launch::async,
                                                     [&, i] { return judge_one(tasks[i], logs[i]); }));
                    }
                    for (auto i = begin; i < end; ++i) outcomes[i] = futures[i - begin].get();
                }
                // Integrate in retrieval order regardless of completion order.
                for (std::size_t i = 0; i < tasks.size(); ++i) {
                    stage.absorb(std::move(logs[i]));
                    const auto& doc = doc_of(tasks[i].doc_id);
                    result.graph = integrate_external(result.graph, doc, outcomes[i].verdict, outcomes[i].triples);
                    result.judgments.push_back(
                        {result.terms[tasks[i].term_index].surface, doc.id, outcomes[i].verdict, true});
                }
            }
        }
    }

    // translate
    {
        StageTimer stage(result, Stage::translate);
        std::vector<RetrievedDocument> accepted;
        for (const auto& id : result.graph.accepted_docs()) {
            auto it = std::find_if(result.documents.begin(), result.documents.end(),
                                   [&](const auto& d) { return d.id == id; });
            if (it != result.documents.end()) accepted.push_back(*it);
        }
        CallLog log;
        try {
            auto translation = translate_with_knowledge(source_text, result.graph, accepted, langs, config.budget,
                                                        call_for(config.backends.translator), log);
            result.target_text = std::move(translation.text);
            result.term_renderings = std::move(translation.term_renderings);
        } catch (...) {
            stage.absorb(std::move(log));
            throw;
        }
        stage.absorb(std::move(log));
    }

    result.judged_count = result.judgments.size();
    result.accepted_count = result.graph.accepted_docs().size();
    return result;
}

// ---- batch ---------------------------------------------------------------------------

std::size_t RunManifest::failures() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.status == "failed"; }));
}

std::string RunManifest::to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
        json rec = {{"doc_id", e.doc_id},
                    {"status", e.status},
                    {"config_hash", config_hash},
                    {"term_count", e.term_count},
                    {"judged_count", e.judged_count},
                    {"accepted_count", e.accepted_count},
                    {"timings", e.timings_ms}};
        if (!e.error.empty()) rec["error"] = e.error;
        out += rec.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

BatchOutcome run_batch(Gateway& gateway, const std::vector<SourceDocument>& corpus, const LangPair& langs,
                       const PipelineConfig& config) {
    validate_config(config, gateway);
    std::vector<std::optional<TranslationResult>> slots(corpus.size());
    std::vector<ManifestEntry> entries(corpus.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < corpus.size(); i = next++) {
            auto& entry = entries[i];
            entry.doc_id = corpus[i].id;
            try {
                auto r = run_pipeline(gateway, corpus[i].id, corpus[i].text, langs, config);
                entry.status = r.detector_fallback ? "fallback_direct" : "ok";
                entry.term_count = r.term_count;
                entry.judged_count = r.judged_count;
                entry.accepted_count = r.accepted_count;
                entry.timings_ms = r.timings_ms;
                slots[i] = std::move(r);
            } catch (const std::exception& e) {
                entry.status = "failed";
                entry.error = e.what();
            }
        }
    };

    const auto width = std::min(config.batch_width, std::max<std::size_t>(corpus.size(), 1));
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    BatchOutcome out;
    out.manifest.config_hash = config.config_hash.empty() ? pipeline_config_hash(config) : config.config_hash;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (const auto& [stage, ms] : entries[i].timings_ms) out.manifest.total_timings_ms[stage] += ms;
        if (slots[i]) out.results.push_back(std::move(*slots[i]));
    }
    out.manifest.entries = std::move(entries);
    return out;
}

// ---- transcripts on disk -----------------------------------------------------------

std::string transcript_dir_name(std::string_view doc_id) {
    std::string out;
    for (char c : doc_id) {
        const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '_' || c == '.';
        out.push_back(safe ? c : '_');
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

std::filesystem::path write_transcript(const TranslationResult& result, const std::filesystem::path& directory) {
    const auto dir = directory / transcript_dir_name(result.source_doc_id);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());

    auto full = result_to_json(result, false);
    const auto transcript = full["transcript"];
    full.erase("graph");
    full.erase("transcript");
    write_atomically(dir / kResultFile, detail::canonical_dump(full));
    write_atomically(dir / kGraphFile, serialize_graph(result.graph));
    write_atomically(dir / kTranscriptFile, detail::canonical_dump(transcript));
    return dir;
}

TranslationResult read_transcript(const std::filesystem::path& doc_directory) {
    auto j = detail::parse_json(read_file(doc_directory / kResultFile), "result");
    j["graph"] = detail::parse_json(read_file(doc_directory / kGraphFile), "graph");
    j["transcript"] = detail::parse_json(read_file(doc_directory / kTranscriptFile), "transcript");
    return result_from_json(j);
}

}  // namespace crat
