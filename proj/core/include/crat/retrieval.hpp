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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crat/types.hpp"

namespace crat {

// ---- tokenization -------------------------------------------------------------

/// `simple`: ASCII-lowercased runs of letters/digits, with every CJK code point
/// its own token; `whitespace`: maximal non-space runs, case preserved.
enum class TokenizerId { simple, whitespace };

std::string_view to_string(TokenizerId t) noexcept;
std::optional<TokenizerId> parse_tokenizer(std::string_view s) noexcept;

struct Token {
    std::string text;    // normalized form
    std::size_t offset;  // byte offset of the raw token in the input
    std::size_t size;    // raw byte length
};

std::vector<Token> tokenize(std::string_view text, TokenizerId tokenizer);

// ---- lexical index ----------------------------------------------------------------

struct CorpusDocument {
    std::string id;
    std::string title;
    std::string text;

    friend bool operator==(const CorpusDocument&, const CorpusDocument&) = default;
};

struct Posting {
    std::uint32_t doc;  // ordinal in id order
    std::uint32_t term_frequency;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Immutable inverted index. Documents are held in ascending id order, so
/// posting lists (by ordinal) are also sorted by doc id. Title and text are
/// both indexed.
class CorpusIndex {
public:
    std::size_t doc_count() const noexcept { return docs_.size(); }
    const CorpusDocument& document(std::uint32_t ordinal) const { return docs_.at(ordinal); }
    std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_.at(ordinal); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    TokenizerId tokenizer() const noexcept { return tokenizer_; }
    std::size_t term_count() const noexcept { return postings_.size(); }

    /// Empty for an unseen term.
    std::span<const Posting> postings(std::string_view term) const;
    const std::map<std::string, std::vector<Posting>, std::less<>>& all_postings() const noexcept {
        return postings_;
    }

    friend bool operator==(const CorpusIndex&, const CorpusIndex&) = default;

    friend CorpusIndex build_index(std::vector<CorpusDocument> corpus, TokenizerId tokenizer);
    friend CorpusIndex deserialize_index(std::string_view bytes);

private:
    std::vector<CorpusDocument> docs_;
    std::vector<std::uint32_t> doc_lengths_;
    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    double avg_doc_length_ = 0.0;
    TokenizerId tokenizer_ = TokenizerId::simple;
};

/// Order-independent in the input. Throws Error(duplicate_id).
CorpusIndex build_index(std::vector<CorpusDocument> corpus, TokenizerId tokenizer = TokenizerId::simple);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 with idf = ln(1 + (N - df + 0.5) / (df + 0.5)). Query tokens
/// count with multiplicity. Returns the top min(k, matches) documents by
/// score, ties broken by ascending id.
std::vector<RetrievedDocument> search(const CorpusIndex& index, std::string_view query, std::size_t k,
                                      const Bm25Params& params = {});

inline constexpr int kIndexFormatVersion = 1;

std::string serialize_index(const CorpusIndex& index);
CorpusIndex deserialize_index(std::string_view bytes);
void save_index(const CorpusIndex& index, const std::filesystem::path& path);
CorpusIndex load_index(const std::filesystem::path& path);

/// JSON Lines, one {id, title, text} object per line; blank lines skipped.
/// Throws ParseError whose line() is the 1-based offending line.
std::vector<CorpusDocument> parse_corpus_jsonl(std::string_view content);
std::vector<CorpusDocument> load_corpus_jsonl(const std::filesystem::path& path);

// ---- glossary ---------------------------------------------------------------------

struct GlossaryEntry {
    std::string source_term;
    std::string target_term;
    std::string note;
    std::size_t line = 0;
};

/// `source_term<TAB>target_term<TAB>note` per line; note may be omitted.
/// Blank lines and lines starting with '#' are skipped.
std::vector<GlossaryEntry> parse_glossary_tsv(std::string_view content);
std::vector<GlossaryEntry> load_glossary_tsv(const std::filesystem::path& path);

// ---- sources ------------------------------------------------------------------------

struct RetrievalQuery {
    std::string term;  // the unknown term's surface
    std::string text;  // term plus its source context window
};

class RetrievalSource {
public:
    virtual ~RetrievalSource() = default;
    virtual DocumentSource kind() const noexcept = 0;
    /// Results in non-increasing score order. May throw
    /// Error(retrieval_source); callers isolate the failure.
    virtual std::vector<RetrievedDocument> fetch(const RetrievalQuery& query, std::size_t k) = 0;
};

class LocalIndexSource : public RetrievalSource {
public:
    explicit LocalIndexSource(std::shared_ptr<const CorpusIndex> index, Bm25Params params = {});
    DocumentSource kind() const noexcept override { return DocumentSource::local_index; }
    std::vector<RetrievedDocument> fetch(const RetrievalQuery& query, std::size_t k) override;

private:
    std::shared_ptr<const CorpusIndex> index_;
    Bm25Params params_;
};

/// Exact (case-insensitive) term matches score 2, entries whose source term
/// occurs in the context query score 1; file order breaks ties.
class GlossarySource : public RetrievalSource {
public:
    explicit GlossarySource(std::vector<GlossaryEntry> entries, std::string name = "glossary");
    DocumentSource kind() const noexcept override { return DocumentSource::glossary; }
    std::vector<RetrievedDocument> fetch(const RetrievalQuery& query, std::size_t k) override;

    static RetrievedDocument to_document(const GlossaryEntry& entry, const std::string& name, double score);

private:
    std::vector<GlossaryEntry> entries_;
    std::string name_;
};

struct RemoteSearchConfig {
    std::string endpoint_url;
    std::chrono::milliseconds timeout{10000};
};

/// GET endpoint?q=<query>&k=<k>, expecting a JSON array of
/// {id, title, text, score}. k == 0 makes no request. Throws
/// Error(retrieval_source) on transport failure, non-2xx or bad payload.
std::vector<RetrievedDocument> remote_search(const RemoteSearchConfig& config, std::string_view query,
                                             std::size_t k);

class RemoteSearchSource : public RetrievalSource {
public:
    explicit RemoteSearchSource(RemoteSearchConfig config);
    DocumentSource kind() const noexcept override { return DocumentSource::remote; }
    std::vector<RetrievedDocument> fetch(const RetrievalQuery& query, std::size_t k) override;

private:
    RemoteSearchConfig config_;
};

inline constexpr std::size_t kDefaultMaxDocuments = 5;  // N2
inline constexpr std::size_t kContextWindowTokens = 10;

/// Term surface followed by the source slice spanning up to `window` tokens
/// either side of the term.
RetrievalQuery build_term_query(const TermCandidate& term, std::string_view source_text,
                                std::size_t window = kContextWindowTokens);

/// Queries each source in order, concatenates results in source order,
/// drops repeated (source, id) pairs and caps the list at `max_total`.
/// A failing source is skipped and reported in `warnings`.
std::vector<RetrievedDocument> retrieve_for_term(const TermCandidate& term, std::string_view source_text,
                                                 std::span<const std::shared_ptr<RetrievalSource>> sources,
                                                 std::size_t k_per_source,
                                                 std::size_t max_total,
                                                 std::vector<std::string>& warnings);

}  // namespace crat
