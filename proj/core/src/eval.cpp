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

#include "crat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "crat/error.hpp"
#include "crat/text.hpp"
#include "json_util.hpp"

namespace crat {

using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Calls fn(line, line_no) for each non-blank line, rethrowing ParseErrors
// with the line number attached.
template <class Fn>
void for_each_jsonl(std::string_view content, std::string_view what, Fn&& fn) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        const auto line = content.substr(pos, nl - pos);
        ++line_no;
        pos = nl + 1;
        if (text::trim(line).empty()) continue;
        try {
            fn(detail::parse_json(line, what), line_no);
        } catch (const ParseError& e) {
            throw ParseError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what(),
                             e.position(), line_no);
        }
    }
}

bool is_ascii_punct(unsigned char c) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
}

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == 0x3000; }

bool char_level(std::string_view lang) { return lang == "zh" || lang.starts_with("zh-"); }

using Ngram = std::vector<std::string_view>;

std::map<Ngram, std::uint64_t> count_ngrams(const std::vector<std::string>& toks, std::size_t n) {
    std::map<Ngram, std::uint64_t> out;
    if (toks.size() < n) return out;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        Ngram g;
        g.reserve(n);
        for (std::size_t k = 0; k < n; ++k) g.emplace_back(toks[i + k]);
        ++out[std::move(g)];
    }
    return out;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

// ---- parallel corpus -------------------------------------------------------------------

std::vector<ParallelExample> parse_parallel_jsonl(std::string_view content) {
    std::vector<ParallelExample> out;
    std::set<std::string> seen;
    for_each_jsonl(content, "parallel corpus", [&](const json& j, std::size_t) {
        detail::reject_unknown_keys(j, {"id", "source_text", "reference_text", "source_lang", "target_lang"},
                                    "example");
        ParallelExample ex{detail::require_string(j, "id", "example"),
                           detail::require_string(j, "source_text", "example"),
                           detail::require_string(j, "reference_text", "example"),
                           detail::require_string(j, "source_lang", "example"),
                           detail::require_string(j, "target_lang", "example")};
        if (ex.id.empty()) detail::schema_error("example", "empty id");
        if (text::trim(ex.source_text).empty() || text::trim(ex.reference_text).empty()) {
            detail::schema_error("example", "source_text and reference_text must be non-empty");
        }
        if (!is_known_language(ex.source_lang)) detail::schema_error("example", "unknown language '" + ex.source_lang + "'");
        if (!is_known_language(ex.target_lang)) detail::schema_error("example", "unknown language '" + ex.target_lang + "'");
        if (!seen.insert(ex.id).second) detail::schema_error("example", "duplicate id '" + ex.id + "'");
        out.push_back(std::move(ex));
    });
    return out;
}

std::vector<ParallelExample> load_parallel_jsonl(const std::filesystem::path& path) {
    return parse_parallel_jsonl(slurp(path));
}

// ---- BLEU ------------------------------------------------------------------------------

std::vector<std::string> bleu_tokenize(std::string_view input, std::string_view target_lang) {
    const bool chars = char_level(target_lang);
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
    };
    for (const auto& cp : text::decode_utf8(input)) {
        const auto raw = input.substr(cp.offset, cp.size);
        if (is_space(cp.value)) {
            flush();
        } else if (cp.value < 0x80 && is_ascii_punct(static_cast<unsigned char>(cp.value))) {
            flush();
            out.emplace_back(raw);
        } else if (chars && (text::is_cjk(cp.value) || text::is_cjk_punctuation(cp.value))) {
            flush();
            out.emplace_back(raw);
        } else if (cp.value >= U'A' && cp.value <= U'Z') {
            word.push_back(static_cast<char>(cp.value - U'A' + U'a'));
        } else {
            word.append(raw);
        }
    }
    flush();
    return out;
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
    for (int n = 0; n < kBleuOrder; ++n) {
        matches[n] += o.matches[n];
        totals[n] += o.totals[n];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
    return *this;
}

BleuStats bleu_stats(std::string_view candidate, std::string_view reference, std::string_view target_lang) {
    const auto cand = bleu_tokenize(candidate, target_lang);
    const auto ref = bleu_tokenize(reference, target_lang);
    BleuStats s;
    s.candidate_length = cand.size();
    s.reference_length = ref.size();
    for (int n = 1; n <= kBleuOrder; ++n) {
        const auto c = count_ngrams(cand, n);
        const auto r = count_ngrams(ref, n);
        for (const auto& [gram, count] : c) {
            s.totals[n - 1] += count;
            if (auto it = r.find(gram); it != r.end()) s.matches[n - 1] += std::min(count, it->second);
        }
    }
    return s;
}

double bleu_from_stats(const BleuStats& s) {
    if (s.candidate_length == 0) return 0.0;
    double log_sum = 0.0;
    for (int n = 0; n < kBleuOrder; ++n) {
        double m = static_cast<double>(s.matches[n]);
        double t = static_cast<double>(s.totals[n]);
        if (s.matches[n] == 0) {
            m += 1.0;
            t += 1.0;
        }
        log_sum += std::log(m / t);
    }
    const double c = static_cast<double>(s.candidate_length);
    const double r = static_cast<double>(s.reference_length);
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    const double score = 100.0 * bp * std::exp(log_sum / kBleuOrder);
    return std::clamp(score, 0.0, 100.0);
}

double corpus_bleu(std::span<const std::string> candidates, std::span<const std::string> references,
                   std::string_view target_lang) {
    if (candidates.empty()) throw Error(ErrorKind::invalid_argument, "corpus_bleu needs at least one pair");
    if (candidates.size() != references.size()) {
        throw Error(ErrorKind::invalid_argument, "corpus_bleu: " + std::to_string(candidates.size()) +
                                                     " candidates but " + std::to_string(references.size()) +
                                                     " references");
    }
    BleuStats total;
    for (std::size_t i = 0; i < candidates.size(); ++i) total += bleu_stats(candidates[i], references[i], target_lang);
    return bleu_from_stats(total);
}

// ---- term consistency ------------------------------------------------------------------

TermConsistency term_consistency(const TranslationResult& result) {
    TermConsistency out;
    std::vector<std::string> qualifying;
    for (const auto& [surface, node] : result.graph.nodes()) {
        if (text::count_occurrences(result.source_text, surface) >= 2) qualifying.push_back(surface);
    }
    if (qualifying.empty()) return out;
    if (!result.term_renderings) {
        out.warnings.push_back("no term rendering map for '" + result.source_doc_id + "'; term consistency absent");
        return out;
    }
    for (const auto& surface : qualifying) {
        auto it = result.term_renderings->find(surface);
        if (it == result.term_renderings->end() || it->second.empty()) {
            out.warnings.push_back("no rendering reported for term '" + surface + "'");
            continue;
        }
        const auto& r = it->second;
        const bool same = std::all_of(r.begin(), r.end(), [&](const std::string& x) { return x == r.front(); });
        out.per_term[surface] = same;
        ++out.qualifying;
        if (same) ++out.consistent;
    }
    if (out.qualifying > 0) out.value = static_cast<double>(out.consistent) / static_cast<double>(out.qualifying);
    return out;
}

// ---- reports ---------------------------------------------------------------------------

void recompute_aggregates(MetricReport& report) {
    BleuStats total;
    double consis_sum = 0.0;
    std::size_t consis_n = 0;
    double comet_sum = 0.0;
    std::size_t comet_n = 0;
    std::size_t q = 0;
    std::size_t c = 0;
    for (const auto& ex : report.per_example) {
        total += ex.bleu;
        if (ex.consis) {
            consis_sum += *ex.consis;
            ++consis_n;
        }
        if (ex.comet) {
            comet_sum += *ex.comet;
            ++comet_n;
        }
        q += ex.terms_qualifying;
        c += ex.terms_consistent;
    }
    report.bleu = report.per_example.empty() ? 0.0 : bleu_from_stats(total);
    report.consis = consis_n ? std::optional(consis_sum / static_cast<double>(consis_n)) : std::nullopt;
    report.comet = comet_n ? std::optional(comet_sum / static_cast<double>(comet_n)) : std::nullopt;
    report.term_consistency = q ? std::optional(static_cast<double>(c) / static_cast<double>(q)) : std::nullopt;
}

MetricReport evaluate_run(std::span<const TranslationResult> results, std::span<const ParallelExample> examples,
                          const EvalOptions& options, CallLog* consis_log) {
    if (examples.empty()) throw Error(ErrorKind::evaluation, "no examples to evaluate");

    std::map<std::string, const TranslationResult*> by_id;
    for (const auto& r : results) {
        if (!by_id.emplace(r.source_doc_id, &r).second) {
            throw Error(ErrorKind::evaluation, "duplicate result id '" + r.source_doc_id + "'");
        }
    }
    std::vector<std::string> missing;
    std::set<std::string> example_ids;
    for (const auto& ex : examples) {
        example_ids.insert(ex.id);
        if (!by_id.contains(ex.id)) missing.push_back(ex.id);
    }
    std::vector<std::string> unexpected;
    for (const auto& [id, _] : by_id) {
        if (!example_ids.contains(id)) unexpected.push_back(id);
    }
    if (!missing.empty() || !unexpected.empty()) {
        std::string msg = "results do not align with examples";
        auto list = [](const std::vector<std::string>& ids) {
            std::string s;
            for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
            return s;
        };
        if (!missing.empty()) msg += "; missing results for: " + list(missing);
        if (!unexpected.empty()) msg += "; no example for: " + list(unexpected);
        throw Error(ErrorKind::evaluation, msg);
    }

    MetricReport report;
    report.config_hash = options.config_hash;
    report.target_lang = examples.front().target_lang;
    for (const auto& ex : examples) {
        if (ex.target_lang != report.target_lang) {
            throw Error(ErrorKind::evaluation, "examples mix target languages '" + report.target_lang + "' and '" +
                                                   ex.target_lang + "'");
        }
    }
    if (options.external_scores) {
        for (const auto& [id, _] : *options.external_scores) {
            if (!example_ids.contains(id)) throw Error(ErrorKind::evaluation, "external score for unknown id '" + id + "'");
        }
    }

    CallLog scratch;
    CallLog& log = consis_log ? *consis_log : scratch;
    for (const auto& ex : examples) {
        const auto& r = *by_id.at(ex.id);
        ExampleMetrics m;
        m.id = ex.id;
        m.bleu = bleu_stats(r.target_text, ex.reference_text, ex.target_lang);
        m.sentence_bleu = bleu_from_stats(m.bleu);
        if (options.term_consistency) {
            auto tc = term_consistency(r);
            m.terms_qualifying = tc.qualifying;
            m.terms_consistent = tc.consistent;
            for (auto& w : tc.warnings) report.warnings.push_back(ex.id + ": " + w);
        }
        if (options.consis) {
            try {
                auto cr = consis_evaluate(ex.source_text, r.target_text, r.terms, r.langs, *options.consis, log);
                m.consis = cr.score;
                m.consis_findings = std::move(cr.term_findings);
            } catch (const Error& e) {
                m.errors.push_back(std::string("consis: ") + e.what());
            }
        }
        if (options.external_scores) {
            if (auto it = options.external_scores->find(ex.id); it != options.external_scores->end()) {
                m.comet = it->second;
            } else {
                m.errors.push_back("external scorer: no score");
            }
        }
        report.per_example.push_back(std::move(m));
    }
    recompute_aggregates(report);
    return report;
}

json report_to_json(const MetricReport& report) {
    json per = json::array();
    for (const auto& m : report.per_example) {
        json findings = json::array();
        for (const auto& f : m.consis_findings) {
            findings.push_back({{"surface", f.surface}, {"judged_consistent", f.judged_consistent}, {"note", f.note}});
        }
        per.push_back({{"id", m.id},
                       {"bleu_stats",
                        {{"matches", m.bleu.matches},
                         {"totals", m.bleu.totals},
                         {"candidate_length", m.bleu.candidate_length},
                         {"reference_length", m.bleu.reference_length}}},
                       {"sentence_bleu", m.sentence_bleu},
                       {"consis", opt(m.consis)},
                       {"consis_findings", findings},
                       {"terms_qualifying", m.terms_qualifying},
                       {"terms_consistent", m.terms_consistent},
                       {"comet", opt(m.comet)},
                       {"errors", m.errors}});
    }
    return {{"config_hash", report.config_hash},
            {"target_lang", report.target_lang},
            {"bleu", report.bleu},
            {"consis", opt(report.consis)},
            {"term_consistency", opt(report.term_consistency)},
            {"comet", opt(report.comet)},
            {"per_example", per},
            {"warnings", report.warnings}};
}

MetricReport report_from_json(const json& j) {
    MetricReport r;
    r.config_hash = detail::require_string(j, "config_hash", "report");
    r.target_lang = detail::require_string(j, "target_lang", "report");
    r.bleu = detail::require(j, "bleu", "report").get<double>();
    r.consis = opt_double(j, "consis");
    r.term_consistency = opt_double(j, "term_consistency");
    r.comet = opt_double(j, "comet");
    for (const auto& pj : detail::require_array(j, "per_example", "report")) {
        ExampleMetrics m;
        m.id = detail::require_string(pj, "id", "example metrics");
        const auto& bs = detail::require(pj, "bleu_stats", "example metrics");
        m.bleu.matches = bs.at("matches").get<std::array<std::uint64_t, kBleuOrder>>();
        m.bleu.totals = bs.at("totals").get<std::array<std::uint64_t, kBleuOrder>>();
        m.bleu.candidate_length = bs.at("candidate_length").get<std::uint64_t>();
        m.bleu.reference_length = bs.at("reference_length").get<std::uint64_t>();
        m.sentence_bleu = detail::require(pj, "sentence_bleu", "example metrics").get<double>();
        m.consis = opt_double(pj, "consis");
        for (const auto& f : detail::require_array(pj, "consis_findings", "example metrics")) {
            m.consis_findings.push_back({f.at("surface").get<std::string>(), f.at("judged_consistent").get<bool>(),
                                         f.at("note").get<std::string>()});
        }
        m.terms_qualifying = detail::require(pj, "terms_qualifying", "example metrics").get<std::size_t>();
        m.terms_consistent = detail::require(pj, "terms_consistent", "example metrics").get<std::size_t>();
        m.comet = opt_double(pj, "comet");
        m.errors = detail::require_array(pj, "errors", "example metrics").get<std::vector<std::string>>();
        r.per_example.push_back(std::move(m));
    }
    r.warnings = detail::require_array(j, "warnings", "report").get<std::vector<std::string>>();
    return r;
}

std::string serialize_report(const MetricReport& report) { return detail::canonical_dump(report_to_json(report)); }

std::map<std::string, double> parse_scorer_jsonl(std::string_view content) {
    std::map<std::string, double> out;
    for_each_jsonl(content, "scorer output", [&](const json& j, std::size_t) {
        const auto id = detail::require_string(j, "id", "score");
        const auto& s = detail::require(j, "score", "score");
        if (!s.is_number()) detail::schema_error("score", "field 'score' must be a number");
        if (!out.emplace(id, s.get<double>()).second) detail::schema_error("score", "duplicate id '" + id + "'");
    });
    return out;
}

std::map<std::string, double> load_scorer_jsonl(const std::filesystem::path& path) {
    return parse_scorer_jsonl(slurp(path));
}

// ---- comparison ------------------------------------------------------------------------

Comparison compare_reports(const MetricReport& baseline, const MetricReport& crat) {
    std::set<std::string> a;
    std::set<std::string> b;
    for (const auto& m : baseline.per_example) a.insert(m.id);
    for (const auto& m : crat.per_example) b.insert(m.id);
    if (a != b) {
        std::string diff;
        for (const auto& id : a) {
            if (!b.contains(id)) diff += " " + id + "(baseline only)";
        }
        for (const auto& id : b) {
            if (!a.contains(id)) diff += " " + id + "(crat only)";
        }
        throw Error(ErrorKind::evaluation, "reports cover different examples:" + diff);
    }
    Comparison c;
    auto row = [&](std::string name, std::optional<double> x, std::optional<double> y) {
        std::optional<double> d;
        if (x && y) d = *y - *x;
        c.rows.push_back({std::move(name), x, y, d});
    };
    row("bleu", baseline.bleu, crat.bleu);
    row("consis", baseline.consis, crat.consis);
    row("term_consistency", baseline.term_consistency, crat.term_consistency);
    row("comet", baseline.comet, crat.comet);
    return c;
}

std::string render_comparison_table(const Comparison& comparison) {
    auto cell = [](const std::string& metric, const std::optional<double>& v, bool sign) -> std::string {
        if (!v) return "n/a";
        // term consistency is a fraction; the rest are on a 0-100 scale
        const bool fraction = metric == "term_consistency";
        const char* fmt = fraction ? (sign ? "%+.3f" : "%.3f") : (sign ? "%+.1f" : "%.1f");
        char buf[64];
        std::snprintf(buf, sizeof buf, fmt, *v);
        return buf;
    };
    std::vector<std::array<std::string, 4>> lines{{"metric", "baseline", "crat", "delta"}};
    for (const auto& r : comparison.rows) {
        lines.push_back({r.metric, cell(r.metric, r.baseline, false), cell(r.metric, r.crat, false),
                         cell(r.metric, r.delta, true)});
    }
    std::array<std::size_t, 4> width{};
    for (const auto& l : lines) {
        for (int i = 0; i < 4; ++i) width[i] = std::max(width[i], l[i].size());
    }
    std::string out;
    for (const auto& l : lines) {
        std::string line = l[0] + std::string(width[0] - l[0].size(), ' ');
        for (int i = 1; i < 4; ++i) line += "  " + std::string(width[i] - l[i].size(), ' ') + l[i];
        out += line + "\n";
    }
    return out;
}

json comparison_to_json(const Comparison& comparison) {
    json rows = json::array();
    for (const auto& r : comparison.rows) {
        rows.push_back({{"metric", r.metric}, {"baseline", opt(r.baseline)}, {"crat", opt(r.crat)}, {"delta", opt(r.delta)}});
    }
    return {{"rows", rows}};
}

}  // namespace crat
