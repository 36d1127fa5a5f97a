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

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crat/types.hpp"

namespace crat {

/// Where a triple came from: the source text itself, or an admitted document.
struct Provenance {
    enum class Kind { internal, external };

    Kind kind = Kind::internal;
    std::optional<std::string> doc_id;  // present iff kind == external

    static Provenance internal() { return {}; }
    static Provenance external(std::string doc) { return {Kind::external, std::move(doc)}; }

    bool is_external() const noexcept { return kind == Kind::external; }
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct KnowledgeTriple {
    std::string subject;
    std::string relation;
    std::string object;
    Provenance provenance;
    std::set<std::string> term_keys;

    /// Same fact from the same origin; term_keys are not compared.
    bool same_fact(const KnowledgeTriple& o) const noexcept {
        return subject == o.subject && relation == o.relation && object == o.object &&
               provenance == o.provenance;
    }
    friend bool operator==(const KnowledgeTriple&, const KnowledgeTriple&) = default;
};

/// A graph node: one distinct term surface (case-sensitive).
struct TermNode {
    std::string surface;
    TermCategory category = TermCategory::low_confidence;
    Span first_span;

    friend bool operator==(const TermNode&, const TermNode&) = default;
};

/// Translation knowledge graph for one source document.
///
/// Values are immutable: every operation below returns a new graph and leaves
/// its input untouched, so a graph can be shared read-only across threads.
/// Triple order is internal triples in extraction order followed by external
/// triples in document-admission order.
class TransKG {
public:
    TransKG() = default;

    const std::string& source_doc_id() const noexcept { return source_doc_id_; }
    const std::map<std::string, TermNode>& nodes() const noexcept { return nodes_; }
    const std::vector<KnowledgeTriple>& triples() const noexcept { return triples_; }
    const std::vector<std::string>& accepted_docs() const noexcept { return accepted_docs_; }

    bool has_node(std::string_view surface) const;
    bool empty() const noexcept { return triples_.empty() && accepted_docs_.empty(); }

    std::vector<const KnowledgeTriple*> internal_triples() const;
    std::vector<const KnowledgeTriple*> external_triples() const;

    friend bool operator==(const TransKG&, const TransKG&) = default;

    friend TransKG new_graph(std::string source_doc_id, std::span<const TermCandidate> terms);
    friend TransKG add_internal(const TransKG& graph, std::span<const KnowledgeTriple> triples);
    friend TransKG integrate_external(const TransKG& graph, const RetrievedDocument& doc,
                                      const JudgeVerdict& verdict,
                                      std::span<const KnowledgeTriple> triples);
    friend TransKG filter_graph(const TransKG& graph, std::string_view surface);
    friend TransKG graph_from_json(const nlohmann::json& doc);

private:
    std::string source_doc_id_;
    std::map<std::string, TermNode> nodes_;
    std::vector<KnowledgeTriple> triples_;
    std::vector<std::string> accepted_docs_;
};

/// One node per distinct surface; the first candidate with a surface wins.
TransKG new_graph(std::string source_doc_id, std::span<const TermCandidate> terms);

/// Appends internal triples in order, dropping exact duplicates.
/// Throws Error(invalid_argument) on an unknown term key or external provenance.
TransKG add_internal(const TransKG& graph, std::span<const KnowledgeTriple> triples);

/// Verdict-gated admission of one document. INCORRECT returns the input
/// unchanged. CORRECT appends doc.id to accepted_docs (once) and appends the
/// triples, which must carry external provenance naming doc.id.
TransKG integrate_external(const TransKG& graph, const RetrievedDocument& doc,
                           const JudgeVerdict& verdict, std::span<const KnowledgeTriple> triples);

std::vector<KnowledgeTriple> triples_for_term(const TransKG& graph, std::string_view surface);

inline constexpr int kGraphFormatVersion = 1;

/// Canonical text form: key-sorted JSON with a version field, two-space
/// indent and a trailing newline. Equal graphs give identical bytes.
std::string serialize_graph(const TransKG& graph);

/// Throws ParseError (with byte position) on malformed input or on a
/// document that violates graph invariants.
TransKG deserialize_graph(std::string_view bytes);

nlohmann::json graph_to_json(const TransKG& graph);
/// Validating conversion; throws ParseError on schema or invariant violations.
TransKG graph_from_json(const nlohmann::json& doc);

/// Restricts a graph to the triples touching `surface` (for display).
TransKG filter_graph(const TransKG& graph, std::string_view surface);

}  // namespace crat
