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

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crat/gateway.hpp"
#include "crat/transkg.hpp"
#include "crat/types.hpp"

namespace crat {

enum class AgentKind { detector, extractor, judge, translator, consis };

std::string_view to_string(AgentKind a) noexcept;

/// Result of one structured agent call: the final raw reply and, when it held
/// exactly one valid payload block, the parsed payload.
struct AgentOutputEnvelope {
    AgentKind agent = AgentKind::detector;
    std::string raw_text;
    std::optional<nlohmann::json> parsed;
    int repair_attempts = 0;  // 0..2
    std::string parse_error;  // last error when parsed is empty
};

/// Everything an agent call produced besides its return value.
struct CallLog {
    std::vector<ChatExchange> exchanges;
    std::vector<AgentOutputEnvelope> envelopes;
    std::vector<std::string> warnings;

    void append(CallLog&& other);
};

/// Which backend an agent talks to, and with what sampling parameters.
struct AgentCall {
    Gateway* gateway = nullptr;
    std::string backend_id;
    ChatParams params;
};

inline constexpr int kMaxRepairAttempts = 2;

/// Extracts the single ```json fenced block from a reply. Throws ParseError
/// when there is no block, more than one, or the block is not a JSON object.
nlohmann::json extract_payload_block(std::string_view reply);

/// Sends `messages`, then repairs at most twice: once re-prompting with the
/// parse/validation error, once asking for the bare block. `validate` throws
/// crat::Error to reject a parsed payload.
AgentOutputEnvelope run_structured(const AgentCall& call, AgentKind agent,
                                   std::vector<ChatMessage> messages,
                                   const std::function<void(const nlohmann::json&)>& validate,
                                   CallLog& log);

// ---- detector ---------------------------------------------------------------

std::vector<ChatMessage> detector_prompt(std::string_view source_text, const LangPair& langs);

/// Candidates sorted by span start, each anchored at the first occurrence of
/// its surface; overlapping spans keep the longer one. Throws
/// Error(detection) when the reply stays unparsable after repairs.
std::vector<TermCandidate> detect_unknown_terms(std::string_view source_text, const LangPair& langs,
                                                const AgentCall& call, CallLog& log);

// ---- extractor --------------------------------------------------------------

std::vector<ChatMessage> extractor_prompt(std::string_view source_text,
                                          std::span<const TermCandidate> terms, const LangPair& langs);

/// Internal triples whose term keys all name given terms. Makes no gateway
/// call for an empty term list. Throws Error(extraction) after failed repairs.
std::vector<KnowledgeTriple> extract_internal_knowledge(std::string_view source_text,
                                                        std::span<const TermCandidate> terms,
                                                        const LangPair& langs, const AgentCall& call,
                                                        CallLog& log);

// ---- judge ------------------------------------------------------------------

struct JudgeOutcome {
    JudgeVerdict verdict;
    std::vector<KnowledgeTriple> triples;  // external, keyed to the judged term
};

std::vector<ChatMessage> judge_prompt(std::span<const KnowledgeTriple> internal_knowledge,
                                      const RetrievedDocument& doc, std::string_view source_text,
                                      const TermCandidate& term, const LangPair& langs);

/// Back-translation judge. Fail-closed: a reply without a usable verdict
/// after repairs is ruled INCORRECT with rationale "unparsable".
JudgeOutcome judge_document(std::span<const KnowledgeTriple> internal_knowledge,
                            const RetrievedDocument& doc, std::string_view source_text,
                            const TermCandidate& term, const LangPair& langs, const AgentCall& call,
                            CallLog& log);

// ---- translator -------------------------------------------------------------

struct KnowledgeBudget {
    std::size_t max_triples = 20;
    std::size_t max_excerpts = 3;
    std::size_t max_excerpt_chars = 500;
};

struct Translation {
    std::string text;
    /// term surface -> rendering used at each occurrence; absent if the
    /// translator did not supply a map.
    std::optional<std::map<std::string, std::vector<std::string>>> term_renderings;
};

/// Knowledge block for the translator prompt; empty for a graph with no
/// nodes, triples or accepted documents.
std::string render_knowledge_section(const TransKG& graph,
                                     std::span<const RetrievedDocument> accepted_documents,
                                     const KnowledgeBudget& budget);

std::vector<ChatMessage> translator_prompt(std::string_view source_text, const TransKG& graph,
                                           std::span<const RetrievedDocument> accepted_documents,
                                           const LangPair& langs, const KnowledgeBudget& budget);

/// `accepted_documents` supplies excerpts for graph.accepted_docs (others are
/// ignored). Throws Error(translation) when no non-empty translation results.
Translation translate_with_knowledge(std::string_view source_text, const TransKG& graph,
                                     std::span<const RetrievedDocument> accepted_documents,
                                     const LangPair& langs, const KnowledgeBudget& budget,
                                     const AgentCall& call, CallLog& log);

// ---- CONSIS evaluator ---------------------------------------------------------

struct TermFinding {
    std::string surface;
    bool judged_consistent = false;
    std::string note;

    friend bool operator==(const TermFinding&, const TermFinding&) = default;
};

struct ConsisResult {
    double score = 0.0;  // [0, 100]
    std::vector<TermFinding> term_findings;
};

std::vector<ChatMessage> consis_prompt(std::string_view source_text, std::string_view candidate,
                                       std::span<const TermCandidate> terms, const LangPair& langs);

/// Throws Error(evaluation) when the rubric reply stays unparsable.
ConsisResult consis_evaluate(std::string_view source_text, std::string_view candidate_translation,
                             std::span<const TermCandidate> terms, const LangPair& langs,
                             const AgentCall& call, CallLog& log);

}  // namespace crat
