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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crat/agents.hpp"
#include "crat/gateway.hpp"
#include "crat/retrieval.hpp"
#include "crat/transkg.hpp"

namespace crat {

/// Pipeline stages in execution order.
enum class Stage { detect, extract, retrieve, judge, translate };

std::string_view to_string(Stage s) noexcept;

/// crat: full pipeline. unrefined_kg: detector + graph constructor, every
/// retrieved document admitted without judging. direct: translator only.
enum class PipelineMode { crat, unrefined_kg, direct };

std::string_view to_string(PipelineMode m) noexcept;
std::optional<PipelineMode> parse_pipeline_mode(std::string_view s) noexcept;

enum class DetectorFallback { fail, translate_direct };

struct AgentBackends {
    std::string detector;
    std::string extractor;
    std::string judge;
    std::string translator;
};

struct PipelineConfig {
    AgentBackends backends;
    ChatParams params;
    std::vector<std::shared_ptr<RetrievalSource>> sources;
    std::size_t k_per_source = kDefaultMaxDocuments;
    std::size_t max_documents = kDefaultMaxDocuments;  // N2, per term
    KnowledgeBudget budget;
    DetectorFallback on_detector_error = DetectorFallback::translate_direct;
    PipelineMode mode = PipelineMode::crat;
    std::size_t batch_width = 1;
    std::size_t judge_width = 1;
    std::string config_hash;  // recorded in manifests; see pipeline_config_hash()
};

/// Throws Error(configuration) naming the first violated constraint.
void validate_config(const PipelineConfig& config, const Gateway& gateway);

/// Hash of the configuration fields that affect outputs.
std::string pipeline_config_hash(const PipelineConfig& config);

struct StageRecord {
    Stage stage = Stage::detect;
    std::vector<ChatExchange> exchanges;
    std::vector<AgentOutputEnvelope> envelopes;
    std::vector<std::string> warnings;
};

/// Ordered audit log of one run: stage markers in execution order, each
/// owning the exchanges made inside it.
struct AgentTranscript {
    std::vector<StageRecord> stages;

    std::vector<Stage> stage_sequence() const;
    std::size_t exchange_count() const;
};

struct JudgeRecord {
    std::string term;
    std::string doc_id;
    JudgeVerdict verdict;
    bool judged_by_model = true;  // false for the unrefined_kg pass-through gate
};

struct TranslationResult {
    std::string source_doc_id;
    std::string source_text;
    LangPair langs;
    PipelineMode mode = PipelineMode::crat;
    std::string target_text;
    std::vector<TermCandidate> terms;
    std::vector<RetrievedDocument> documents;  // every retrieved document, first-seen order
    std::vector<JudgeRecord> judgments;         // judging order
    TransKG graph;
    std::optional<std::map<std::string, std::vector<std::string>>> term_renderings;
    AgentTranscript transcript;
    std::map<std::string, std::int64_t> timings_ms;  // stage name -> elapsed
    std::size_t term_count = 0;
    std::size_t judged_count = 0;
    std::size_t accepted_count = 0;
    bool detector_fallback = false;  // detector failed; translated directly
};

/// Runs detect -> extract -> retrieve -> judge/integrate -> translate.
/// Throws Error(translation) (or the gateway's error) when no translation can
/// be produced, and Error(detection) when detection fails under
/// DetectorFallback::fail.
TranslationResult run_pipeline(Gateway& gateway, std::string source_doc_id, std::string_view source_text,
                               const LangPair& langs, const PipelineConfig& config);

/// JSON form. Without timings, execution metadata (stage timings, exchange
/// latency, attempt counts and cache-hit flags) is omitted so reruns compare byte-equal.
nlohmann::json result_to_json(const TranslationResult& result, bool include_timings);
TranslationResult result_from_json(const nlohmann::json& j);
std::string serialize_result(const TranslationResult& result, bool include_timings);

nlohmann::json transcript_to_json(const AgentTranscript& transcript, bool include_timings);
AgentTranscript transcript_from_json(const nlohmann::json& j);

// ---- batch -------------------------------------------------------------------

struct SourceDocument {
    std::string id;
    std::string text;
};

struct ManifestEntry {
    std::string doc_id;
    std::string status;  // ok | fallback_direct | failed
    std::string error;
    std::size_t term_count = 0;
    std::size_t judged_count = 0;
    std::size_t accepted_count = 0;
    std::map<std::string, std::int64_t> timings_ms;
};

struct RunManifest {
    std::string config_hash;
    std::vector<ManifestEntry> entries;  // input order
    std::map<std::string, std::int64_t> total_timings_ms;

    std::size_t failures() const;
    /// JSON Lines, one record per document.
    std::string to_jsonl() const;
};

struct BatchOutcome {
    std::vector<TranslationResult> results;  // successful documents, input order
    RunManifest manifest;
};

/// Runs up to config.batch_width documents concurrently. Per-document
/// failures are recorded in the manifest and do not stop the batch.
BatchOutcome run_batch(Gateway& gateway, const std::vector<SourceDocument>& corpus, const LangPair& langs,
                       const PipelineConfig& config);

// ---- transcripts on disk -----------------------------------------------------------

inline constexpr std::string_view kResultFile = "result.json";
inline constexpr std::string_view kGraphFile = "graph.json";
inline constexpr std::string_view kTranscriptFile = "transcript.json";

/// Directory name used for a document id (unsafe characters replaced).
std::string transcript_dir_name(std::string_view doc_id);

/// Writes <directory>/<doc>/{result,graph,transcript}.json without timings,
/// replacing files atomically. Returns the document directory.
std::filesystem::path write_transcript(const TranslationResult& result, const std::filesystem::path& directory);

/// Reads a document directory written by write_transcript.
TranslationResult read_transcript(const std::filesystem::path& doc_directory);

}  // namespace crat
