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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crat/agents.hpp"
#include "crat/pipeline.hpp"

namespace crat {

struct ParallelExample {
    std::string id;
    std::string source_text;
    std::string reference_text;
    std::string source_lang;
    std::string target_lang;
};

/// JSON Lines {id, source_text, reference_text, source_lang, target_lang}.
/// Throws ParseError carrying the 1-based line on malformed or invalid records.
std::vector<ParallelExample> parse_parallel_jsonl(std::string_view content);
std::vector<ParallelExample> load_parallel_jsonl(const std::filesystem::path& path);

// ---- BLEU --------------------------------------------------------------------------

/// zh targets: one token per CJK code point, other runs split as below.
/// Everything else: ASCII-lowercased, whitespace split, punctuation split off.
std::vector<std::string> bleu_tokenize(std::string_view text, std::string_view target_lang);

inline constexpr int kBleuOrder = 4;

/// Sufficient statistics of one candidate/reference pair.
struct BleuStats {
    std::array<std::uint64_t, kBleuOrder> matches{};  // clipped
    std::array<std::uint64_t, kBleuOrder> totals{};   // candidate n-grams
    std::uint64_t candidate_length = 0;
    std::uint64_t reference_length = 0;

    BleuStats& operator+=(const BleuStats& o);
    friend bool operator==(const BleuStats&, const BleuStats&) = default;
};

BleuStats bleu_stats(std::string_view candidate, std::string_view reference, std::string_view target_lang);

/// Corpus BLEU-4 in [0, 100] from summed statistics. A zero corpus-level
/// precision becomes (m+1)/(t+1); an empty candidate side scores 0.
double bleu_from_stats(const BleuStats& stats);

/// Throws Error(invalid_argument) on empty or unequal lists.
double corpus_bleu(std::span<const std::string> candidates, std::span<const std::string> references,
                   std::string_view target_lang);

// ---- term consistency ------------------------------------------------------------------

struct TermConsistency {
    std::optional<double> value;  // absent when no term qualifies
    std::size_t qualifying = 0;
    std::size_t consistent = 0;
    std::map<std::string, bool> per_term;
    std::vector<std::string> warnings;
};

/// Over graph nodes that occur at least twice in the source: a term scores 1
/// when every rendering in result.term_renderings is identical.
TermConsistency term_consistency(const TranslationResult& result);

// ---- reports ---------------------------------------------------------------------------

struct ExampleMetrics {
    std::string id;
    BleuStats bleu;
    double sentence_bleu = 0.0;
    std::optional<double> consis;
    std::vector<TermFinding> consis_findings;
    std::size_t terms_qualifying = 0;
    std::size_t terms_consistent = 0;
    std::optional<double> comet;
    std::vector<std::string> errors;
};

struct MetricReport {
    std::string config_hash;
    std::string target_lang;
    double bleu = 0.0;
    std::optional<double> consis;
    std::optional<double> term_consistency;
    std::optional<double> comet;  // external scorer only
    std::vector<ExampleMetrics> per_example;  // example order
    std::vector<std::string> warnings;
};

struct EvalOptions {
    std::optional<AgentCall> consis;  // CONSIS runs only when set
    bool term_consistency = true;
    std::optional<std::map<std::string, double>> external_scores;
    std::string config_hash;
};

/// Pairs results with examples by id; a missing or unexpected id throws
/// Error(evaluation) naming the ids. A failed CONSIS call is recorded on its
/// example and left out of the mean.
MetricReport evaluate_run(std::span<const TranslationResult> results, std::span<const ParallelExample> examples,
                          const EvalOptions& options, CallLog* consis_log = nullptr);

/// Recomputes the aggregates from per_example.
void recompute_aggregates(MetricReport& report);

nlohmann::json report_to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);
std::string serialize_report(const MetricReport& report);

/// JSON Lines {id, score}.
std::map<std::string, double> parse_scorer_jsonl(std::string_view content);
std::map<std::string, double> load_scorer_jsonl(const std::filesystem::path& path);

struct ComparisonRow {
    std::string metric;
    std::optional<double> baseline;
    std::optional<double> crat;
    std::optional<double> delta;  // crat - baseline, absent when either side is
};

struct Comparison {
    std::vector<ComparisonRow> rows;  // bleu, consis, term_consistency, comet
};

/// Throws Error(evaluation) when the reports cover different example ids.
Comparison compare_reports(const MetricReport& baseline, const MetricReport& crat);

std::string render_comparison_table(const Comparison& comparison);
nlohmann::json comparison_to_json(const Comparison& comparison);

}  // namespace crat
