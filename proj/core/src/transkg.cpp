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

#include "crat/transkg.hpp"

#include <algorithm>

#include "crat/error.hpp"
#include "crat/text.hpp"
#include "json_util.hpp"

namespace crat {

namespace {

using detail::json;

void check_triple_shape(const KnowledgeTriple& t) {
    if (text::trim(t.subject).empty() || text::trim(t.relation).empty() ||
        text::trim(t.object).empty()) {
        throw Error(ErrorKind::invalid_argument,
                    "triple has an empty subject, relation or object");
    }
    if (t.term_keys.empty()) {
        throw Error(ErrorKind::invalid_argument,
                    "triple (" + t.subject + ", " + t.relation + ", " + t.object +
                        ") informs no term");
    }
    if (t.provenance.is_external() != t.provenance.doc_id.has_value()) {
        throw Error(ErrorKind::invalid_argument, "provenance doc_id present iff external");
    }
}

void check_term_keys(const TransKG& g, const KnowledgeTriple& t) {
    for (const auto& key : t.term_keys) {
        if (!g.has_node(key)) throw Error(ErrorKind::invalid_argument, "unknown term key '" + key + "'");
    }
}

void append_unique(std::vector<KnowledgeTriple>& out, const KnowledgeTriple& t) {
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const KnowledgeTriple& o) { return o.same_fact(t); });
    if (!dup) out.push_back(t);
}

json triple_to_json(const KnowledgeTriple& t) {
    json prov = {{"kind", t.provenance.is_external() ? "external" : "internal"}};
    if (t.provenance.doc_id) prov["doc_id"] = *t.provenance.doc_id;
    return {{"subject", t.subject},
            {"relation", t.relation},
            {"object", t.object},
            {"provenance", prov},
            {"term_keys", t.term_keys}};
}

KnowledgeTriple triple_from_json(const json& j) {
    constexpr std::string_view where = "triple";
    KnowledgeTriple t;
    t.subject = detail::require_string(j, "subject", where);
    t.relation = detail::require_string(j, "relation", where);
    t.object = detail::require_string(j, "object", where);
    const auto& prov = detail::require(j, "provenance", where);
    const auto kind = detail::require_string(prov, "kind", "provenance");
    if (kind == "internal") {
        t.provenance = Provenance::internal();
        if (prov.contains("doc_id")) detail::schema_error("provenance", "internal with doc_id");
    } else if (kind == "external") {
        t.provenance = Provenance::external(detail::require_string(prov, "doc_id", "provenance"));
    } else {
        detail::schema_error("provenance", "unknown kind '" + kind + "'");
    }
    for (const auto& k : detail::require_array(j, "term_keys", where)) {
        if (!k.is_string()) detail::schema_error(where, "term key must be a string");
        t.term_keys.insert(k.get<std::string>());
    }
    return t;
}

}  // namespace

bool TransKG::has_node(std::string_view surface) const {
    return nodes_.find(std::string(surface)) != nodes_.end();
}

std::vector<const KnowledgeTriple*> TransKG::internal_triples() const {
    std::vector<const KnowledgeTriple*> out;
    for (const auto& t : triples_) {
        if (!t.provenance.is_external()) out.push_back(&t);
    }
    return out;
}

std::vector<const KnowledgeTriple*> TransKG::external_triples() const {
    std::vector<const KnowledgeTriple*> out;
    for (const auto& t : triples_) {
        if (t.provenance.is_external()) out.push_back(&t);
    }
    return out;
}

TransKG new_graph(std::string source_doc_id, std::span<const TermCandidate> terms) {
    TransKG g;
    g.source_doc_id_ = std::move(source_doc_id);
    for (const auto& term : terms) {
        g.nodes_.try_emplace(term.surface, TermNode{term.surface, term.category, term.span});
    }
    return g;
}

TransKG add_internal(const TransKG& graph, std::span<const KnowledgeTriple> triples) {
    for (const auto& t : triples) {
        check_triple_shape(t);
        if (t.provenance.is_external()) {
            throw Error(ErrorKind::invalid_argument,
                        "add_internal given a triple with external provenance");
        }
        check_term_keys(graph, t);
    }
    TransKG g = graph;
    // Internal triples precede every external one.
    const auto split = std::find_if(g.triples_.begin(), g.triples_.end(),
                                    [](const auto& t) { return t.provenance.is_external(); });
    std::vector<KnowledgeTriple> internal(g.triples_.begin(), split);
    std::vector<KnowledgeTriple> external(split, g.triples_.end());
    for (const auto& t : triples) append_unique(internal, t);
    internal.insert(internal.end(), external.begin(), external.end());
    g.triples_ = std::move(internal);
    return g;
}

TransKG integrate_external(const TransKG& graph, const RetrievedDocument& doc,
                           const JudgeVerdict& verdict, std::span<const KnowledgeTriple> triples) {
    if (verdict.doc_id != doc.id) {
        throw Error(ErrorKind::invalid_argument,
                    "verdict for '" + verdict.doc_id + "' applied to document '" + doc.id + "'");
    }
    for (const auto& t : triples) {
        check_triple_shape(t);
        if (!t.provenance.is_external() || *t.provenance.doc_id != doc.id) {
            throw Error(ErrorKind::invalid_argument,
                        "triple provenance does not name document '" + doc.id + "'");
        }
        check_term_keys(graph, t);
    }
    if (verdict.verdict == Verdict::incorrect) return graph;

    TransKG g = graph;
    if (std::find(g.accepted_docs_.begin(), g.accepted_docs_.end(), doc.id) ==
        g.accepted_docs_.end()) {
        g.accepted_docs_.push_back(doc.id);
    }
    for (const auto& t : triples) append_unique(g.triples_, t);
    return g;
}

std::vector<KnowledgeTriple> triples_for_term(const TransKG& graph, std::string_view surface) {
    std::vector<KnowledgeTriple> out;
    for (const auto& t : graph.triples()) {
        if (t.term_keys.contains(std::string(surface))) out.push_back(t);
    }
    return out;
}

TransKG filter_graph(const TransKG& graph, std::string_view surface) {
    TransKG g;
    g.source_doc_id_ = graph.source_doc_id_;
    g.triples_ = triples_for_term(graph, surface);
    for (const auto& t : g.triples_) {
        for (const auto& key : t.term_keys) g.nodes_.emplace(key, graph.nodes_.at(key));
        if (t.provenance.is_external()) {
            const auto& id = *t.provenance.doc_id;
            if (std::find(g.accepted_docs_.begin(), g.accepted_docs_.end(), id) ==
                g.accepted_docs_.end()) {
                g.accepted_docs_.push_back(id);
            }
        }
    }
    if (auto it = graph.nodes_.find(std::string(surface)); it != graph.nodes_.end()) {
        g.nodes_.emplace(it->first, it->second);
    }
    return g;
}

json graph_to_json(const TransKG& graph) {
    json nodes = json::object();
    for (const auto& [key, node] : graph.nodes()) {
        nodes[key] = {{"category", to_string(node.category)},
                      {"span", {node.first_span.start, node.first_span.end}}};
    }
    json triples = json::array();
    for (const auto& t : graph.triples()) triples.push_back(triple_to_json(t));
    return {{"version", kGraphFormatVersion},
            {"source_doc_id", graph.source_doc_id()},
            {"nodes", nodes},
            {"triples", triples},
            {"accepted_docs", graph.accepted_docs()}};
}

TransKG graph_from_json(const json& doc) {
    constexpr std::string_view where = "graph";
    detail::reject_unknown_keys(doc, {"version", "source_doc_id", "nodes", "triples", "accepted_docs"},
                                where);
    const auto& version = detail::require(doc, "version", where);
    if (!version.is_number_integer() || version.get<int>() != kGraphFormatVersion) {
        detail::schema_error(where, "unsupported version");
    }
    TransKG g;
    g.source_doc_id_ = detail::require_string(doc, "source_doc_id", where);

    const auto& nodes = detail::require(doc, "nodes", where);
    if (!nodes.is_object()) detail::schema_error(where, "nodes must be an object");
    for (auto it = nodes.begin(); it != nodes.end(); ++it) {
        const auto cat = parse_term_category(detail::require_string(*it, "category", "node"));
        if (!cat) detail::schema_error("node", "unknown category");
        const auto& span = detail::require(*it, "span", "node");
        if (!span.is_array() || span.size() != 2 || !span[0].is_number_unsigned() ||
            !span[1].is_number_unsigned()) {
            detail::schema_error("node", "span must be [start, end]");
        }
        g.nodes_.emplace(it.key(),
                         TermNode{it.key(), *cat, {span[0].get<std::size_t>(), span[1].get<std::size_t>()}});
    }

    for (const auto& id : detail::require_array(doc, "accepted_docs", where)) {
        if (!id.is_string()) detail::schema_error(where, "accepted doc id must be a string");
        const auto s = id.get<std::string>();
        if (std::find(g.accepted_docs_.begin(), g.accepted_docs_.end(), s) != g.accepted_docs_.end()) {
            detail::schema_error(where, "duplicate accepted doc '" + s + "'");
        }
        g.accepted_docs_.push_back(s);
    }

    bool seen_external = false;
    for (const auto& tj : detail::require_array(doc, "triples", where)) {
        auto t = triple_from_json(tj);
        try {
            check_triple_shape(t);
            check_term_keys(g, t);
        } catch (const Error& e) {
            detail::schema_error(where, e.what());
        }
        if (t.provenance.is_external()) {
            seen_external = true;
            if (std::find(g.accepted_docs_.begin(), g.accepted_docs_.end(), *t.provenance.doc_id) ==
                g.accepted_docs_.end()) {
                detail::schema_error(where, "external triple names unaccepted doc '" +
                                                *t.provenance.doc_id + "'");
            }
        } else if (seen_external) {
            detail::schema_error(where, "internal triple after external triples");
        }
        g.triples_.push_back(std::move(t));
    }
    return g;
}

std::string serialize_graph(const TransKG& graph) {
    return detail::canonical_dump(graph_to_json(graph));
}

TransKG deserialize_graph(std::string_view bytes) {
    return graph_from_json(detail::parse_json(bytes, "graph"));
}

}  // namespace crat
