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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace crat {

/// Why the detector considers a term risky to translate.
enum class TermCategory { polyseme, acronym, proper_noun, new_term, low_confidence };

std::string_view to_string(TermCategory c) noexcept;
std::optional<TermCategory> parse_term_category(std::string_view s) noexcept;

/// Half-open byte interval [start, end) into a UTF-8 source text.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - start; }
    bool overlaps(const Span& o) const noexcept { return start < o.end && o.start < end; }
    friend bool operator==(const Span&, const Span&) = default;
};

struct TermCandidate {
    std::string surface;
    Span span;
    TermCategory category = TermCategory::low_confidence;
    std::string rationale;

    friend bool operator==(const TermCandidate&, const TermCandidate&) = default;
};

/// Checks 0 <= start < end <= |source| and source[start,end) == surface.
bool span_resolves(const TermCandidate& term, std::string_view source) noexcept;

struct LangPair {
    std::string source;
    std::string target;

    friend bool operator==(const LangPair&, const LangPair&) = default;
};

/// Language codes accepted in configs and parallel corpora.
inline constexpr std::string_view kLanguageRegistry[] = {"de", "en", "es", "fr", "it", "ja",
                                                         "ko", "pt", "ru", "vi", "zh"};

bool is_known_language(std::string_view code) noexcept;

enum class DocumentSource { local_index, glossary, remote };

std::string_view to_string(DocumentSource s) noexcept;
std::optional<DocumentSource> parse_document_source(std::string_view s) noexcept;

/// One piece of external evidence returned by a retrieval source.
struct RetrievedDocument {
    std::string id;
    std::string title;
    std::string text;
    DocumentSource source = DocumentSource::local_index;
    double score = 0.0;

    friend bool operator==(const RetrievedDocument&, const RetrievedDocument&) = default;
};

enum class Verdict { correct, incorrect };

std::string_view to_string(Verdict v) noexcept;

/// The judge's ruling on one retrieved document for one term.
struct JudgeVerdict {
    std::string doc_id;
    Verdict verdict = Verdict::incorrect;
    std::string proposed_rendering;
    std::string back_translation;
    std::string alignment_rationale;

    friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

}  // namespace crat
