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

#include "crat/agents.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "crat/error.hpp"
#include "crat/prompt.hpp"
#include "crat/text.hpp"
#include "json_util.hpp"

namespace crat {

using nlohmann::json;

std::string_view to_string(AgentKind a) noexcept {
    switch (a) {
    case AgentKind::detector: return "detector";
    case AgentKind::extractor: return "extractor";
    case AgentKind::judge: return "judge";
    case AgentKind::translator: return "translator";
    case AgentKind::consis: return "consis";
    }
    return "detector";
}

void CallLog::append(CallLog&& other) {
    std::move(other.exchanges.begin(), other.exchanges.end(), std::back_inserter(exchanges));
    std::move(other.envelopes.begin(), other.envelopes.end(), std::back_inserter(envelopes));
    std::move(other.warnings.begin(), other.warnings.end(), std::back_inserter(warnings));
}

namespace {

std::vector<ChatMessage> two_part(std::string_view agent, const std::map<std::string, std::string>& vars) {
    const std::string base(agent);
    return {{ChatRole::system, builtin_template(base + ".system.v1").render({})},
            {ChatRole::user, builtin_template(base + ".user.v1").render(vars)}};
}

std::string term_list(std::span<const TermCandidate> terms) {
    std::string out;
    for (const auto& t : terms) {
        out += "- " + t.surface + " (" + std::string(to_string(t.category)) + ")\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string format_triple(const KnowledgeTriple& t) {
    return "(" + t.subject + "; " + t.relation + "; " + t.object + ")";
}

const json* find_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) return nullptr;
    return &*it;
}

void require_array_field(const json& payload, const char* key) {
    if (!payload.contains(key) || !payload[key].is_array()) {
        throw Error(ErrorKind::parse, std::string("payload needs an array field \"") + key + "\"");
    }
}

}  // namespace

// ---- structured output ------------------------------------------------------

json extract_payload_block(std::string_view reply) {
    constexpr std::string_view fence = "```";
    std::vector<std::size_t> opens;
    for (auto pos = reply.find(fence); pos != std::string_view::npos;) {
        const auto tag = text::to_lower_ascii(reply.substr(pos + 3, 4));
        const auto close_search = pos + 3;
        if (tag == "json") {
            opens.push_back(pos);
            const auto close = reply.find(fence, pos + 7);
            if (close == std::string_view::npos) break;
            pos = reply.find(fence, close + 3);
        } else {
            pos = reply.find(fence, close_search);
        }
    }
    if (opens.empty()) throw ParseError("reply has no ```json block", 0);
    if (opens.size() > 1) throw ParseError("reply has more than one ```json block", opens[1]);
    const auto body_start = opens.front() + 7;
    const auto close = reply.find(fence, body_start);
    if (close == std::string_view::npos) throw ParseError("```json block is not closed", opens.front());
    const auto body = reply.substr(body_start, close - body_start);
    json payload;
    try {
        payload = json::parse(body.begin(), body.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("block is not valid JSON: ") + e.what(), body_start + e.byte);
    }
    if (!payload.is_object()) throw ParseError("block must hold a JSON object", body_start);
    return payload;
}

AgentOutputEnvelope run_structured(const AgentCall& call, AgentKind agent,
                                   std::vector<ChatMessage> messages,
                                   const std::function<void(const json&)>& validate, CallLog& log) {
    if (call.gateway == nullptr) throw Error(ErrorKind::invalid_argument, "agent call has no gateway");
    AgentOutputEnvelope env;
    env.agent = agent;
    const auto original = messages;
    for (int attempt = 0;; ++attempt) {
        env.repair_attempts = attempt;
        std::string raw;
        try {
            auto ex = call.gateway->complete({call.backend_id, messages, call.params});
            raw = ex.response_text;
            log.exchanges.push_back(std::move(ex));
            auto payload = extract_payload_block(raw);
            if (validate) validate(payload);
            env.raw_text = raw;
            env.parsed = std::move(payload);
            env.parse_error.clear();
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::parse && e.kind() != ErrorKind::empty_response) throw;
            env.raw_text = raw;
            env.parse_error = e.what();
        }
        if (attempt == kMaxRepairAttempts) break;
        messages = original;
        if (!raw.empty()) messages.push_back({ChatRole::assistant, raw});
        if (attempt == 0) {
            messages.push_back({ChatRole::user, builtin_template("repair.v1").render({{"error", env.parse_error}})});
        } else {
            messages.push_back({ChatRole::user, builtin_template("block_only.v1").render({})});
        }
    }
    log.envelopes.push_back(env);
    return env;
}

// ---- detector ---------------------------------------------------------------

std::vector<ChatMessage> detector_prompt(std::string_view source_text, const LangPair& langs) {
    return two_part("detector", {{"source_lang", langs.source},
                                 {"target_lang", langs.target},
                                 {"source_text", std::string(source_text)}});
}

std::vector<TermCandidate> detect_unknown_terms(std::string_view source_text, const LangPair& langs,
                                                const AgentCall& call, CallLog& log) {
    if (text::trim(source_text).empty()) {
        throw Error(ErrorKind::invalid_argument, "source text is empty");
    }
    auto validate = [](const json& p) {
        require_array_field(p, "terms");
        for (const auto& t : p["terms"]) {
            if (!t.is_object() || !find_string(t, "surface")) {
                throw Error(ErrorKind::parse, "each term needs a string \"surface\"");
            }
        }
    };
    auto env = run_structured(call, AgentKind::detector, detector_prompt(source_text, langs), validate, log);
    if (!env.parsed) {
        throw Error(ErrorKind::detection, "detector reply unparsable after repairs: " + env.parse_error);
    }

    std::vector<TermCandidate> found;
    for (const auto& t : (*env.parsed)["terms"]) {
        TermCandidate c;
        c.surface = t["surface"].get<std::string>();
        if (c.surface.empty()) {
            log.warnings.push_back("detector: dropped empty term");
            continue;
        }
        const auto at = source_text.find(c.surface);
        if (at == std::string_view::npos) {
            log.warnings.push_back("detector: term '" + c.surface + "' not found in source; dropped");
            continue;
        }
        c.span = {at, at + c.surface.size()};
        const auto* cat = find_string(t, "category");
        const auto parsed_cat = cat ? parse_term_category(cat->get<std::string>()) : std::nullopt;
        if (!parsed_cat) {
            log.warnings.push_back("detector: term '" + c.surface +
                                   "' has no valid category; using low_confidence");
        }
        c.category = parsed_cat.value_or(TermCategory::low_confidence);
        if (const auto* r = find_string(t, "rationale")) c.rationale = r->get<std::string>();
        found.push_back(std::move(c));
    }

    // Longer spans first at equal start, so the sweep keeps the longest.
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        if (a.span.start != b.span.start) return a.span.start < b.span.start;
        return a.span.length() > b.span.length();
    });
    std::vector<TermCandidate> merged;
    for (auto& c : found) {
        if (!merged.empty() && merged.back().span.overlaps(c.span)) {
            if (c.span.length() > merged.back().span.length()) merged.back() = std::move(c);
            continue;
        }
        merged.push_back(std::move(c));
    }
    return merged;
}

// ---- extractor --------------------------------------------------------------

std::vector<ChatMessage> extractor_prompt(std::string_view source_text,
                                          std::span<const TermCandidate> terms, const LangPair& langs) {
    return two_part("extractor", {{"term_list", term_list(terms)},
                                  {"source_lang", langs.source},
                                  {"source_text", std::string(source_text)}});
}

std::vector<KnowledgeTriple> extract_internal_knowledge(std::string_view source_text,
                                                        std::span<const TermCandidate> terms,
                                                        const LangPair& langs, const AgentCall& call,
                                                        CallLog& log) {
    if (terms.empty()) return {};
    auto validate = [](const json& p) {
        require_array_field(p, "triples");
        for (const auto& t : p["triples"]) {
            if (!t.is_object()) throw Error(ErrorKind::parse, "each triple must be an object");
        }
    };
    auto env = run_structured(call, AgentKind::extractor, extractor_prompt(source_text, terms, langs),
                              validate, log);
    if (!env.parsed) {
        throw Error(ErrorKind::extraction, "extractor reply unparsable after repairs: " + env.parse_error);
    }

    std::set<std::string> known;
    for (const auto& t : terms) known.insert(t.surface);

    std::vector<KnowledgeTriple> out;
    for (const auto& tj : (*env.parsed)["triples"]) {
        KnowledgeTriple t;
        for (auto [key, field] : {std::pair{"subject", &t.subject}, std::pair{"relation", &t.relation},
                                  std::pair{"object", &t.object}}) {
            if (const auto* v = find_string(tj, key)) *field = std::string(text::trim(v->get<std::string>()));
        }
        if (t.subject.empty() || t.relation.empty() || t.object.empty()) {
            log.warnings.push_back("extractor: dropped incomplete triple");
            continue;
        }
        bool unknown = false;
        if (tj.contains("terms") && tj["terms"].is_array()) {
            for (const auto& k : tj["terms"]) {
                if (!k.is_string()) continue;
                auto key = k.get<std::string>();
                if (!known.contains(key)) {
                    log.warnings.push_back("extractor: triple " + format_triple(t) +
                                           " names unknown term '" + key + "'; dropped");
                    unknown = true;
                    break;
                }
                t.term_keys.insert(std::move(key));
            }
        } else {
            for (const auto* s : {&t.subject, &t.object}) {
                if (known.contains(*s)) t.term_keys.insert(*s);
            }
        }
        if (unknown) continue;
        if (t.term_keys.empty()) {
            log.warnings.push_back("extractor: triple " + format_triple(t) + " informs no term; dropped");
            continue;
        }
        t.provenance = Provenance::internal();
        out.push_back(std::move(t));
    }
    return out;
}

// ---- judge ------------------------------------------------------------------

std::vector<ChatMessage> judge_prompt(std::span<const KnowledgeTriple> internal_knowledge,
                                      const RetrievedDocument& doc, std::string_view source_text,
                                      const TermCandidate& term, const LangPair& langs) {
    std::string internal;
    for (const auto& t : internal_knowledge) internal += "- " + format_triple(t) + "\n";
    if (internal.empty()) {
        internal = "(none)";
    } else {
        internal.pop_back();
    }
    return two_part("judge", {{"term", term.surface},
                              {"source_lang", langs.source},
                              {"target_lang", langs.target},
                              {"internal_knowledge", internal},
                              {"doc_id", doc.id},
                              {"doc_source", std::string(to_string(doc.source))},
                              {"doc_title", doc.title},
                              {"doc_text", doc.text},
                              {"source_text", std::string(source_text)}});
}

JudgeOutcome judge_document(std::span<const KnowledgeTriple> internal_knowledge,
                            const RetrievedDocument& doc, std::string_view source_text,
                            const TermCandidate& term, const LangPair& langs, const AgentCall& call,
                            CallLog& log) {
    auto validate = [](const json& p) {
        const auto* v = find_string(p, "verdict");
        if (!v) throw Error(ErrorKind::parse, "payload needs a string \"verdict\"");
        const auto s = text::trim(v->get<std::string>());
        if (s != "CORRECT" && s != "INCORRECT" && s != "[CORRECT]" && s != "[INCORRECT]") {
            throw Error(ErrorKind::parse, "verdict must be CORRECT or INCORRECT");
        }
    };
    auto env = run_structured(call, AgentKind::judge,
                              judge_prompt(internal_knowledge, doc, source_text, term, langs), validate, log);

    JudgeOutcome out;
    out.verdict.doc_id = doc.id;
    if (!env.parsed) {
        out.verdict.verdict = Verdict::incorrect;
        out.verdict.alignment_rationale = "unparsable";
        log.warnings.push_back("judge: reply for '" + term.surface + "' / " + doc.id +
                               " unparsable; ruled INCORRECT");
        return out;
    }
    const auto& p = *env.parsed;
    const auto verdict = std::string(text::trim(p["verdict"].get<std::string>()));
    out.verdict.verdict = (verdict == "CORRECT" || verdict == "[CORRECT]") ? Verdict::correct : Verdict::incorrect;
    if (const auto* v = find_string(p, "proposed_rendering")) out.verdict.proposed_rendering = v->get<std::string>();
    if (const auto* v = find_string(p, "back_translation")) out.verdict.back_translation = v->get<std::string>();
    if (const auto* v = find_string(p, "alignment_rationale")) out.verdict.alignment_rationale = v->get<std::string>();

    if (out.verdict.verdict == Verdict::correct && p.contains("triples") && p["triples"].is_array()) {
        for (const auto& tj : p["triples"]) {
            if (!tj.is_object()) continue;
            KnowledgeTriple t;
            if (const auto* v = find_string(tj, "subject")) t.subject = std::string(text::trim(v->get<std::string>()));
            if (const auto* v = find_string(tj, "relation")) t.relation = std::string(text::trim(v->get<std::string>()));
            if (const auto* v = find_string(tj, "object")) t.object = std::string(text::trim(v->get<std::string>()));
            if (t.subject.empty() || t.relation.empty() || t.object.empty()) {
                log.warnings.push_back("judge: dropped incomplete triple from " + doc.id);
                continue;
            }
            t.provenance = Provenance::external(doc.id);
            t.term_keys = {term.surface};
            out.triples.push_back(std::move(t));
        }
    }
    return out;
}

// ---- translator -------------------------------------------------------------

std::string render_knowledge_section(const TransKG& graph,
                                     std::span<const RetrievedDocument> accepted_documents,
                                     const KnowledgeBudget& budget) {
    if (graph.nodes().empty() && graph.empty()) return {};

    std::string terms;
    for (const auto& [surface, _] : graph.nodes()) {
        if (!terms.empty()) terms += ", ";
        terms += surface;
    }
    if (terms.empty()) terms = "(none)";

    std::size_t remaining = budget.max_triples;
    std::string internal_block;
    for (const auto* t : graph.internal_triples()) {
        if (remaining == 0) break;
        internal_block += "- " + format_triple(*t) + "\n";
        --remaining;
    }
    if (!internal_block.empty()) internal_block = "Facts stated in the source text:\n" + internal_block;

    std::string external_block;
    for (const auto* t : graph.external_triples()) {
        if (remaining == 0) break;
        external_block += "- " + format_triple(*t) + " [" + *t->provenance.doc_id + "]\n";
        --remaining;
    }
    if (!external_block.empty()) external_block = "Facts from verified external documents:\n" + external_block;

    std::string excerpt_block;
    std::size_t excerpts = 0;
    for (const auto& id : graph.accepted_docs()) {
        if (excerpts == budget.max_excerpts) break;
        auto it = std::find_if(accepted_documents.begin(), accepted_documents.end(),
                               [&](const RetrievedDocument& d) { return d.id == id; });
        if (it == accepted_documents.end()) continue;
        auto body = text::truncate_code_points(it->text, budget.max_excerpt_chars);
        excerpt_block += "[" + it->id + "] " + it->title + ": " + std::string(body) +
                         (body.size() < it->text.size() ? " ..." : "") + "\n";
        ++excerpts;
    }
    if (!excerpt_block.empty()) excerpt_block = "Verified document excerpts:\n" + excerpt_block;

    return builtin_template("knowledge.v1")
               .render({{"terms", terms},
                        {"internal_block", internal_block},
                        {"external_block", external_block},
                        {"excerpt_block", excerpt_block}}) +
           "\n";
}

std::vector<ChatMessage> translator_prompt(std::string_view source_text, const TransKG& graph,
                                           std::span<const RetrievedDocument> accepted_documents,
                                           const LangPair& langs, const KnowledgeBudget& budget) {
    return two_part("translator",
                    {{"source_lang", langs.source},
                     {"target_lang", langs.target},
                     {"knowledge_section", render_knowledge_section(graph, accepted_documents, budget)},
                     {"source_text", std::string(source_text)}});
}

Translation translate_with_knowledge(std::string_view source_text, const TransKG& graph,
                                     std::span<const RetrievedDocument> accepted_documents,
                                     const LangPair& langs, const KnowledgeBudget& budget,
                                     const AgentCall& call, CallLog& log) {
    auto validate = [](const json& p) {
        const auto* t = find_string(p, "translation");
        if (!t || text::trim(t->get<std::string>()).empty()) {
            throw Error(ErrorKind::parse, "payload needs a non-empty string \"translation\"");
        }
    };
    auto env = run_structured(call, AgentKind::translator,
                              translator_prompt(source_text, graph, accepted_documents, langs, budget),
                              validate, log);
    if (!env.parsed) {
        throw Error(ErrorKind::translation, "translator produced no translation: " + env.parse_error);
    }
    const auto& p = *env.parsed;
    Translation out;
    out.text = p["translation"].get<std::string>();
    if (p.contains("term_renderings") && p["term_renderings"].is_object()) {
        std::map<std::string, std::vector<std::string>> renderings;
        for (auto it = p["term_renderings"].begin(); it != p["term_renderings"].end(); ++it) {
            auto& dst = renderings[it.key()];
            if (it->is_string()) {
                dst.push_back(it->get<std::string>());
            } else if (it->is_array()) {
                for (const auto& r : *it) {
                    if (r.is_string()) dst.push_back(r.get<std::string>());
                }
            }
        }
        out.term_renderings = std::move(renderings);
    } else {
        log.warnings.push_back("translator: reply has no term_renderings map");
    }
    return out;
}

// ---- CONSIS -------------------------------------------------------------------

std::vector<ChatMessage> consis_prompt(std::string_view source_text, std::string_view candidate,
                                       std::span<const TermCandidate> terms, const LangPair& langs) {
    auto list = term_list(terms);
    return two_part("consis", {{"term_list", list.empty() ? std::string("(none)") : list},
                               {"source_lang", langs.source},
                               {"target_lang", langs.target},
                               {"source_text", std::string(source_text)},
                               {"candidate", std::string(candidate)}});
}

ConsisResult consis_evaluate(std::string_view source_text, std::string_view candidate_translation,
                             std::span<const TermCandidate> terms, const LangPair& langs,
                             const AgentCall& call, CallLog& log) {
    auto validate = [](const json& p) {
        if (!p.contains("score") || !p["score"].is_number() || !std::isfinite(p["score"].get<double>())) {
            throw Error(ErrorKind::parse, "payload needs a numeric \"score\"");
        }
    };
    auto env = run_structured(call, AgentKind::consis,
                              consis_prompt(source_text, candidate_translation, terms, langs), validate, log);
    if (!env.parsed) {
        throw Error(ErrorKind::evaluation, "CONSIS reply unparsable after repairs: " + env.parse_error);
    }
    const auto& p = *env.parsed;
    ConsisResult out;
    const double raw = p["score"].get<double>();
    out.score = std::clamp(raw, 0.0, 100.0);
    if (out.score != raw) {
        std::ostringstream msg;
        msg << "consis: score " << raw << " clamped to " << out.score;
        log.warnings.push_back(msg.str());
    }
    if (p.contains("term_findings") && p["term_findings"].is_array()) {
        for (const auto& f : p["term_findings"]) {
            if (!f.is_object()) continue;
            TermFinding tf;
            if (const auto* s = find_string(f, "surface")) tf.surface = s->get<std::string>();
            if (f.contains("consistent") && f["consistent"].is_boolean()) tf.judged_consistent = f["consistent"].get<bool>();
            if (const auto* n = find_string(f, "note")) tf.note = n->get<std::string>();
            out.term_findings.push_back(std::move(tf));
        }
    }
    return out;
}

}  // namespace crat
