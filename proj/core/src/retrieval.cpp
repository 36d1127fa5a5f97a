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

#include "crat/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "crat/error.hpp"
#include "crat/text.hpp"
#include "http_client.hpp"
#include "json_util.hpp"

namespace crat {

using detail::json;

std::string_view to_string(TokenizerId t) noexcept {
    return t == TokenizerId::simple ? "simple" : "whitespace";
}

std::optional<TokenizerId> parse_tokenizer(std::string_view s) noexcept {
    if (s == "simple") return TokenizerId::simple;
    if (s == "whitespace") return TokenizerId::whitespace;
    return std::nullopt;
}

namespace {

enum class CharClass { space, separator, word, ideograph };

CharClass classify(char32_t c) {
    if (c < 0x80) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return CharClass::space;
        if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return CharClass::word;
        return CharClass::separator;
    }
    if (c == 0xA0 || c == 0x3000 || (c >= 0x2000 && c <= 0x200B)) return CharClass::space;
    if (text::is_cjk_punctuation(c) || (c >= 0x2000 && c <= 0x206F) || (c >= 0xA1 && c <= 0xBF) ||
        c == 0xD7 || c == 0xF7) {
        return CharClass::separator;
    }
    if (text::is_cjk(c)) return CharClass::ideograph;
    return CharClass::word;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::vector<Token> tokenize(std::string_view input, TokenizerId tokenizer) {
    std::vector<Token> out;
    const auto cps = text::decode_utf8(input);
    std::size_t run_start = 0;
    std::size_t run_end = 0;
    bool in_run = false;
    auto flush = [&] {
        if (!in_run) return;
        auto raw = input.substr(run_start, run_end - run_start);
        out.push_back({tokenizer == TokenizerId::simple ? text::to_lower_ascii(raw) : std::string(raw),
                       run_start, raw.size()});
        in_run = false;
    };
    for (const auto& cp : cps) {
        const auto cls = classify(cp.value);
        if (tokenizer == TokenizerId::whitespace) {
            if (cls == CharClass::space) {
                flush();
            } else {
                if (!in_run) run_start = cp.offset;
                in_run = true;
                run_end = cp.offset + cp.size;
            }
            continue;
        }
        switch (cls) {
        case CharClass::space:
        case CharClass::separator:
            flush();
            break;
        case CharClass::ideograph:
            flush();
            out.push_back({std::string(input.substr(cp.offset, cp.size)), cp.offset, cp.size});
            break;
        case CharClass::word:
            if (!in_run) run_start = cp.offset;
            in_run = true;
            run_end = cp.offset + cp.size;
            break;
        }
    }
    flush();
    return out;
}

// ---- index -------------------------------------------------------------------

std::span<const Posting> CorpusIndex::postings(std::string_view term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

CorpusIndex build_index(std::vector<CorpusDocument> corpus, TokenizerId tokenizer) {
    std::sort(corpus.begin(), corpus.end(),
              [](const CorpusDocument& a, const CorpusDocument& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < corpus.size(); ++i) {
        if (corpus[i].id == corpus[i - 1].id) {
            throw Error(ErrorKind::duplicate_id, "duplicate document id '" + corpus[i].id + "'");
        }
    }
    CorpusIndex index;
    index.tokenizer_ = tokenizer;
    index.docs_ = std::move(corpus);
    index.doc_lengths_.reserve(index.docs_.size());
    std::uint64_t total = 0;
    for (std::uint32_t ord = 0; ord < index.docs_.size(); ++ord) {
        const auto& doc = index.docs_[ord];
        std::map<std::string, std::uint32_t> tf;
        std::uint32_t len = 0;
        for (const auto* field : {&doc.title, &doc.text}) {
            for (auto& tok : tokenize(*field, tokenizer)) {
                ++tf[std::move(tok.text)];
                ++len;
            }
        }
        for (auto& [term, freq] : tf) index.postings_[term].push_back({ord, freq});
        index.doc_lengths_.push_back(len);
        total += len;
    }
    index.avg_doc_length_ =
        index.docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(index.docs_.size());
    return index;
}

std::vector<RetrievedDocument> search(const CorpusIndex& index, std::string_view query, std::size_t k,
                                      const Bm25Params& params) {
    if (k == 0 || index.doc_count() == 0) return {};
    const auto n = static_cast<double>(index.doc_count());
    const double avgdl = index.avg_doc_length();
    std::vector<double> scores(index.doc_count(), 0.0);
    std::vector<bool> matched(index.doc_count(), false);
    for (const auto& tok : tokenize(query, index.tokenizer())) {
        const auto list = index.postings(tok.text);
        if (list.empty()) continue;
        const auto df = static_cast<double>(list.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& p : list) {
            const auto tf = static_cast<double>(p.term_frequency);
            const auto dl = static_cast<double>(index.doc_length(p.doc));
            const double norm = avgdl > 0.0 ? dl / avgdl : 0.0;
            scores[p.doc] += idf * (tf * (params.k1 + 1.0)) / (tf + params.k1 * (1.0 - params.b + params.b * norm));
            matched[p.doc] = true;
        }
    }
    std::vector<std::uint32_t> hits;
    for (std::uint32_t d = 0; d < matched.size(); ++d) {
        if (matched[d]) hits.push_back(d);
    }
    // Ordinals follow id order, so the ordinal breaks ties by ascending id.
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    const auto take = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(), better);
    std::vector<RetrievedDocument> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto& doc = index.document(hits[i]);
        out.push_back({doc.id, doc.title, doc.text, DocumentSource::local_index, scores[hits[i]]});
    }
    return out;
}

std::string serialize_index(const CorpusIndex& index) {
    json docs = json::array();
    for (std::uint32_t i = 0; i < index.doc_count(); ++i) {
        const auto& d = index.document(i);
        docs.push_back({{"id", d.id}, {"title", d.title}, {"text", d.text}, {"length", index.doc_length(i)}});
    }
    json postings = json::object();
    for (const auto& [term, list] : index.all_postings()) {
        json arr = json::array();
        for (const auto& p : list) arr.push_back({p.doc, p.term_frequency});
        postings[term] = std::move(arr);
    }
    const json body = {{"format", "crat-index"},
                       {"version", kIndexFormatVersion},
                       {"tokenizer", to_string(index.tokenizer())},
                       {"doc_count", index.doc_count()},
                       {"avg_doc_length", index.avg_doc_length()},
                       {"documents", docs},
                       {"postings", postings}};
    return body.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

CorpusIndex deserialize_index(std::string_view bytes) {
    const auto j = detail::parse_json(bytes, "index");
    constexpr std::string_view where = "index";
    if (detail::require_string(j, "format", where) != "crat-index") detail::schema_error(where, "not a crat index");
    if (detail::require(j, "version", where) != kIndexFormatVersion) detail::schema_error(where, "unsupported version");
    const auto tok = parse_tokenizer(detail::require_string(j, "tokenizer", where));
    if (!tok) detail::schema_error(where, "unknown tokenizer");

    CorpusIndex index;
    index.tokenizer_ = *tok;
    for (const auto& d : detail::require_array(j, "documents", where)) {
        index.docs_.push_back({detail::require_string(d, "id", "document"),
                               detail::require_string(d, "title", "document"),
                               detail::require_string(d, "text", "document")});
        index.doc_lengths_.push_back(detail::require(d, "length", "document").get<std::uint32_t>());
    }
    for (std::size_t i = 1; i < index.docs_.size(); ++i) {
        if (!(index.docs_[i - 1].id < index.docs_[i].id)) detail::schema_error(where, "documents not in id order");
    }
    const auto& postings = detail::require(j, "postings", where);
    if (!postings.is_object()) detail::schema_error(where, "postings must be an object");
    for (auto it = postings.begin(); it != postings.end(); ++it) {
        std::vector<Posting> list;
        for (const auto& p : *it) {
            if (!p.is_array() || p.size() != 2) detail::schema_error(where, "posting must be [doc, tf]");
            Posting post{p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>()};
            if (post.doc >= index.docs_.size() || (!list.empty() && list.back().doc >= post.doc)) {
                detail::schema_error(where, "posting list for '" + it.key() + "' is out of order or range");
            }
            list.push_back(post);
        }
        index.postings_.emplace(it.key(), std::move(list));
    }
    std::uint64_t total = std::accumulate(index.doc_lengths_.begin(), index.doc_lengths_.end(), std::uint64_t{0});
    index.avg_doc_length_ =
        index.docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(index.docs_.size());
    return index;
}

void save_index(const CorpusIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << serialize_index(index);
    if (!out) throw Error(ErrorKind::io, "short write on " + path.string());
}

CorpusIndex load_index(const std::filesystem::path& path) { return deserialize_index(read_file(path)); }

std::vector<CorpusDocument> parse_corpus_jsonl(std::string_view content) {
    std::vector<CorpusDocument> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        const auto line = content.substr(pos, nl - pos);
        ++line_no;
        pos = nl + 1;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = detail::parse_json(line, "corpus");
            detail::reject_unknown_keys(j, {"id", "title", "text"}, "corpus record");
            CorpusDocument d{detail::require_string(j, "id", "corpus record"),
                             j.contains("title") ? detail::require_string(j, "title", "corpus record") : "",
                             detail::require_string(j, "text", "corpus record")};
            if (d.id.empty()) detail::schema_error("corpus record", "empty id");
            out.push_back(std::move(d));
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), e.position(), line_no);
        }
    }
    return out;
}

std::vector<CorpusDocument> load_corpus_jsonl(const std::filesystem::path& path) {
    return parse_corpus_jsonl(read_file(path));
}

// ---- glossary ---------------------------------------------------------------------

std::vector<GlossaryEntry> parse_glossary_tsv(std::string_view content) {
    std::vector<GlossaryEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (text::trim(line).empty() || line.front() == '#') continue;
        std::vector<std::string_view> fields;
        std::size_t f = 0;
        while (true) {
            const auto tab = line.find('\t', f);
            fields.push_back(line.substr(f, tab == std::string_view::npos ? line.size() - f : tab - f));
            if (tab == std::string_view::npos) break;
            f = tab + 1;
        }
        if (fields.size() < 2 || fields.size() > 3 || text::trim(fields[0]).empty() || text::trim(fields[1]).empty()) {
            throw ParseError("glossary line " + std::to_string(line_no) +
                                 ": expected source_term<TAB>target_term[<TAB>note]",
                             0, line_no);
        }
        out.push_back({std::string(text::trim(fields[0])), std::string(text::trim(fields[1])),
                       fields.size() == 3 ? std::string(text::trim(fields[2])) : std::string{}, line_no});
    }
    return out;
}

std::vector<GlossaryEntry> load_glossary_tsv(const std::filesystem::path& path) {
    return parse_glossary_tsv(read_file(path));
}

// ---- sources ------------------------------------------------------------------------

LocalIndexSource::LocalIndexSource(std::shared_ptr<const CorpusIndex> index, Bm25Params params)
    : index_(std::move(index)), params_(params) {}

std::vector<RetrievedDocument> LocalIndexSource::fetch(const RetrievalQuery& query, std::size_t k) {
    return search(*index_, query.text, k, params_);
}

GlossarySource::GlossarySource(std::vector<GlossaryEntry> entries, std::string name)
    : entries_(std::move(entries)), name_(std::move(name)) {}

RetrievedDocument GlossarySource::to_document(const GlossaryEntry& e, const std::string& name, double score) {
    std::string body = e.source_term + " => " + e.target_term;
    if (!e.note.empty()) body += " (" + e.note + ")";
    return {name + ":" + std::to_string(e.line), e.source_term, body, DocumentSource::glossary, score};
}

std::vector<RetrievedDocument> GlossarySource::fetch(const RetrievalQuery& query, std::size_t k) {
    const auto term = text::to_lower_ascii(text::trim(query.term));
    const auto context = text::to_lower_ascii(query.text);
    std::vector<RetrievedDocument> exact;
    std::vector<RetrievedDocument> contained;
    for (const auto& e : entries_) {
        const auto src = text::to_lower_ascii(e.source_term);
        if (src == term) {
            exact.push_back(to_document(e, name_, 2.0));
        } else if (!src.empty() && context.find(src) != std::string::npos) {
            contained.push_back(to_document(e, name_, 1.0));
        }
    }
    exact.insert(exact.end(), contained.begin(), contained.end());
    if (exact.size() > k) exact.resize(k);
    return exact;
}

std::vector<RetrievedDocument> remote_search(const RemoteSearchConfig& config, std::string_view query,
                                             std::size_t k) {
    if (k == 0) return {};
    detail::HttpResponse res;
    try {
        const auto url = detail::parse_url(config.endpoint_url);
        res = detail::http_get(url, {{"q", std::string(query)}, {"k", std::to_string(k)}}, config.timeout);
    } catch (const Error& e) {
        throw Error(ErrorKind::retrieval_source, std::string("remote search: ") + e.what());
    }
    if (res.status < 200 || res.status >= 300) {
        throw Error(ErrorKind::retrieval_source,
                    "remote search: HTTP " + std::to_string(res.status) + ": " +
                        std::string(text::truncate_code_points(res.body, 200)));
    }
    std::vector<RetrievedDocument> out;
    try {
        const auto j = json::parse(res.body);
        if (!j.is_array()) throw Error(ErrorKind::retrieval_source, "remote search: reply is not an array");
        for (const auto& hit : j) {
            RetrievedDocument d;
            d.id = hit.at("id").get<std::string>();
            d.title = hit.contains("title") ? hit["title"].get<std::string>() : "";
            d.text = hit.at("text").get<std::string>();
            d.score = hit.contains("score") ? hit["score"].get<double>() : 0.0;
            d.source = DocumentSource::remote;
            if (d.id.empty() || d.text.empty()) continue;
            out.push_back(std::move(d));
            if (out.size() == k) break;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::retrieval_source, std::string("remote search: bad payload: ") + e.what());
    }
    return out;
}

RemoteSearchSource::RemoteSearchSource(RemoteSearchConfig config) : config_(std::move(config)) {
    detail::parse_url(config_.endpoint_url);
}

std::vector<RetrievedDocument> RemoteSearchSource::fetch(const RetrievalQuery& query, std::size_t k) {
    return remote_search(config_, query.text, k);
}

RetrievalQuery build_term_query(const TermCandidate& term, std::string_view source_text, std::size_t window) {
    RetrievalQuery q;
    q.term = term.surface;
    const auto tokens = tokenize(source_text, TokenizerId::whitespace);
    std::size_t begin = std::min(term.span.start, source_text.size());
    std::size_t end = std::min(term.span.end, source_text.size());
    // Tokens strictly before / after the span.
    std::vector<const Token*> before;
    std::vector<const Token*> after;
    for (const auto& t : tokens) {
        if (t.offset + t.size <= term.span.start) before.push_back(&t);
        if (t.offset >= term.span.end) after.push_back(&t);
    }
    if (window > 0 && !before.empty()) begin = before[before.size() - std::min(window, before.size())]->offset;
    if (window > 0 && !after.empty()) {
        const auto* last = after[std::min(window, after.size()) - 1];
        end = last->offset + last->size;
    }
    q.text = term.surface;
    if (end > begin) q.text += " " + std::string(source_text.substr(begin, end - begin));
    return q;
}

std::vector<RetrievedDocument> retrieve_for_term(const TermCandidate& term, std::string_view source_text,
                                                 std::span<const std::shared_ptr<RetrievalSource>> sources,
                                                 std::size_t k_per_source, std::size_t max_total,
                                                 std::vector<std::string>& warnings) {
    std::vector<RetrievedDocument> out;
    if (sources.empty() || max_total == 0) return out;
    const auto query = build_term_query(term, source_text);
    std::set<std::pair<DocumentSource, std::string>> seen;
    for (std::size_t i = 0; i < sources.size() && out.size() < max_total; ++i) {
        std::vector<RetrievedDocument> got;
        try {
            got = sources[i]->fetch(query, k_per_source);
        } catch (const std::exception& e) {
            warnings.push_back("retrieval: source " + std::to_string(i) + " (" +
                               std::string(to_string(sources[i]->kind())) + ") failed for '" + term.surface +
                               "': " + e.what());
            continue;
        }
        for (auto& d : got) {
            if (out.size() == max_total) break;
            if (!seen.emplace(d.source, d.id).second) continue;
            out.push_back(std::move(d));
        }
    }
    return out;
}

}  // namespace crat
