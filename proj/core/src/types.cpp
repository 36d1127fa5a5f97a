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

#include "crat/types.hpp"

#include <algorithm>

namespace crat {

std::string_view to_string(TermCategory c) noexcept {
    switch (c) {
    case TermCategory::polyseme: return "polyseme";
    case TermCategory::acronym: return "acronym";
    case TermCategory::proper_noun: return "proper_noun";
    case TermCategory::new_term: return "new_term";
    case TermCategory::low_confidence: return "low_confidence";
    }
    return "low_confidence";
}

std::optional<TermCategory> parse_term_category(std::string_view s) noexcept {
    for (auto c : {TermCategory::polyseme, TermCategory::acronym, TermCategory::proper_noun,
                   TermCategory::new_term, TermCategory::low_confidence}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

bool span_resolves(const TermCandidate& term, std::string_view source) noexcept {
    const auto& sp = term.span;
    if (sp.start >= sp.end || sp.end > source.size()) return false;
    return source.substr(sp.start, sp.length()) == term.surface;
}

std::string_view to_string(DocumentSource s) noexcept {
    switch (s) {
    case DocumentSource::local_index: return "local_index";
    case DocumentSource::glossary: return "glossary";
    case DocumentSource::remote: return "remote";
    }
    return "local_index";
}

std::optional<DocumentSource> parse_document_source(std::string_view s) noexcept {
    for (auto v : {DocumentSource::local_index, DocumentSource::glossary, DocumentSource::remote}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::string_view to_string(Verdict v) noexcept {
    return v == Verdict::correct ? "CORRECT" : "INCORRECT";
}

bool is_known_language(std::string_view code) noexcept {
    return std::find(std::begin(kLanguageRegistry), std::end(kLanguageRegistry), code) != std::end(kLanguageRegistry);
}

}  // namespace crat
