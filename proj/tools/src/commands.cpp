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

#include "crat/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crat/cli/run_config.hpp"
#include "crat/error.hpp"
#include "crat/eval.hpp"
#include "crat/pipeline.hpp"
#include "crat/retrieval.hpp"
#include "crat/text.hpp"
#include "crat/transkg.hpp"

namespace crat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TranslateArgs {
    std::string input;
    std::string text;
    std::string id = "text-1";
    std::string langs = "en-zh";
    std::string config;
    std::string output;
    std::string mode;
    std::size_t width = 0;
    bool no_cache = false;
};

struct BuildIndexArgs {
    std::string corpus;
    std::string output;
    std::string tokenizer = "simple";
};

struct EvaluateArgs {
    std::vector<std::string> results;
    std::string corpus;
    std::string config;
    std::string report;
    std::string scores;
    bool no_cache = false;
};

struct InspectArgs {
    std::string transcript;
    std::string term;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << bytes;
}

LangPair parse_langs(const std::string& spec) {
    const auto dash = spec.find('-');
    if (dash == std::string::npos) throw Error(ErrorKind::invalid_argument, "--langs expects SRC-TGT, got '" + spec + "'");
    LangPair lp{spec.substr(0, dash), spec.substr(dash + 1)};
    for (const auto& code : {lp.source, lp.target}) {
        if (!is_known_language(code)) throw Error(ErrorKind::invalid_argument, "unknown language '" + code + "'");
    }
    return lp;
}

// Plain text: one document named after the file. JSON Lines: {id, text}
// records, or parallel-corpus records whose languages override --langs.
std::vector<SourceDocument> read_inputs(const fs::path& path, LangPair& langs, std::ostream& err) {
    if (!fs::exists(path)) throw Error(ErrorKind::io, "input file not found: " + path.string());
    const auto content = read_text(path);
    if (path.extension() != ".jsonl") return {{path.stem().string(), content}};

    std::vector<SourceDocument> docs;
    if (content.find("\"source_text\"") != std::string::npos) {
        const auto examples = parse_parallel_jsonl(content);
        for (const auto& ex : examples) {
            const LangPair lp{ex.source_lang, ex.target_lang};
            if (docs.empty()) {
                if (!(lp == langs)) err << "note: using " << lp.source << "-" << lp.target << " from the input corpus\n";
                langs = lp;
            } else if (!(lp == langs)) {
                throw Error(ErrorKind::invalid_argument, "input corpus mixes language pairs");
            }
            docs.push_back({ex.id, ex.source_text});
        }
        return docs;
    }
    std::istringstream lines(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            if (!j.is_object() || !j.contains("id") || !j.contains("text") || j.size() != 2) {
                throw ParseError("expected {id, text}", 0, line_no);
            }
            docs.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
        } catch (const json::exception& e) {
            throw ParseError("input line " + std::to_string(line_no) + ": " + e.what(), 0, line_no);
        } catch (const ParseError& e) {
            throw ParseError("input line " + std::to_string(line_no) + ": " + e.what(), 0, line_no);
        }
    }
    return docs;
}

int cmd_translate(const TranslateArgs& a, std::ostream& out, std::ostream& err) {
    auto config = load_run_config(a.config);
    if (!a.mode.empty()) {
        const auto mode = parse_pipeline_mode(a.mode);
        if (!mode) throw Error(ErrorKind::invalid_argument, "--mode must be crat, unrefined_kg or direct");
        config.set_mode(*mode);
    }
    if (a.width > 0) config.set_width(a.width);

    auto langs = parse_langs(a.langs);
    std::vector<SourceDocument> docs;
    if (!a.input.empty()) {
        docs = read_inputs(a.input, langs, err);
    } else {
        docs.push_back({a.id, a.text});
    }
    if (docs.empty()) throw Error(ErrorKind::invalid_argument, "no input documents");

    auto gateway = make_gateway(config, !a.no_cache);
    const auto pc = make_pipeline_config(config);
    auto outcome = run_batch(*gateway, docs, langs, pc);

    const fs::path dir = a.output;
    fs::create_directories(dir);
    for (const auto& r : outcome.results) {
        write_transcript(r, dir);
        for (const auto& stage : r.transcript.stages) {
            for (const auto& w : stage.warnings) err << "warning: " << r.source_doc_id << ": " << w << "\n";
        }
        out << r.source_doc_id << "\t" << r.target_text << "\n";
    }
    write_text(dir / "manifest.jsonl", outcome.manifest.to_jsonl());

    const auto failures = outcome.manifest.failures();
    for (const auto& e : outcome.manifest.entries) {
        if (e.status == "failed") err << "error: " << e.doc_id << ": " << e.error << "\n";
    }
    if (failures == 0) return kExitOk;
    return failures == outcome.manifest.entries.size() ? kExitFatal : kExitPartial;
}

int cmd_build_index(const BuildIndexArgs& a, std::ostream& out, std::ostream& err) {
    const auto tokenizer = parse_tokenizer(a.tokenizer);
    if (!tokenizer) throw Error(ErrorKind::invalid_argument, "--tokenizer must be simple or whitespace");
    auto corpus = load_corpus_jsonl(a.corpus);
    if (corpus.empty()) err << "warning: corpus " << a.corpus << " holds no documents\n";
    const auto index = build_index(std::move(corpus), *tokenizer);
    save_index(index, a.output);
    out << "documents: " << index.doc_count() << "\n";
    out << "terms: " << index.term_count() << "\n";
    return kExitOk;
}

std::vector<TranslationResult> load_results(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "results directory not found: " + dir.string());
    std::vector<fs::path> docs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / kResultFile)) docs.push_back(entry.path());
    }
    if (docs.empty()) throw Error(ErrorKind::io, "no results in " + dir.string());
    std::sort(docs.begin(), docs.end());
    std::vector<TranslationResult> results;
    for (const auto& d : docs) results.push_back(read_transcript(d));
    return results;
}

std::string summary(const MetricReport& r) {
    auto opt = [](const std::optional<double>& v) {
        if (!v) return std::string("n/a");
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(3);
        s << *v;
        return s.str();
    };
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << "examples: " << r.per_example.size() << "\n";
    s << "bleu: " << r.bleu << "\n";
    s << "consis: " << opt(r.consis) << "\n";
    s << "term_consistency: " << opt(r.term_consistency) << "\n";
    s << "comet: " << opt(r.comet) << "\n";
    return s.str();
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
    if (a.results.empty() || a.results.size() > 2) {
        throw Error(ErrorKind::invalid_argument, "--results takes one directory, or two to compare");
    }
    const auto examples = load_parallel_jsonl(a.corpus);

    std::optional<RunConfig> config;
    if (!a.config.empty()) config = load_run_config(a.config);
    EvalOptions options;
    std::unique_ptr<Gateway> gateway;
    if (config) {
        const auto settings = eval_settings(*config);
        options.term_consistency = settings.term_consistency;
        options.config_hash = config->config_hash();
        if (settings.consis_backend) {
            gateway = make_gateway(*config, !a.no_cache);
            options.consis = AgentCall{gateway.get(), *settings.consis_backend, chat_params(*config)};
        }
        if (settings.external_scores) options.external_scores = load_scorer_jsonl(*settings.external_scores);
    }
    if (!a.scores.empty()) options.external_scores = load_scorer_jsonl(a.scores);

    std::vector<MetricReport> reports;
    for (const auto& dir : a.results) {
        const auto results = load_results(dir);
        reports.push_back(evaluate_run(results, examples, options));
        for (const auto& w : reports.back().warnings) err << "warning: " << w << "\n";
        for (const auto& ex : reports.back().per_example) {
            for (const auto& e : ex.errors) err << "error: " << ex.id << ": " << e << "\n";
        }
    }

    json doc;
    if (reports.size() == 1) {
        out << summary(reports[0]);
        doc = report_to_json(reports[0]);
    } else {
        const auto cmp = compare_reports(reports[0], reports[1]);
        out << render_comparison_table(cmp);
        doc = {{"baseline", report_to_json(reports[0])},
               {"crat", report_to_json(reports[1])},
               {"comparison", comparison_to_json(cmp)}};
    }
    if (!a.report.empty()) write_text(a.report, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_inspect_kg(const InspectArgs& a, std::ostream& out, std::ostream& err) {
    const fs::path dir = a.transcript;
    if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "transcript directory not found: " + dir.string());
    std::vector<fs::path> graphs;
    if (fs::exists(dir / kGraphFile)) {
        graphs.push_back(dir / kGraphFile);
    } else {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_directory() && fs::exists(entry.path() / kGraphFile)) graphs.push_back(entry.path() / kGraphFile);
        }
        std::sort(graphs.begin(), graphs.end());
    }
    if (graphs.empty()) throw Error(ErrorKind::io, "no graph found under " + dir.string());

    for (const auto& path : graphs) {
        auto graph = deserialize_graph(read_text(path));
        if (!a.term.empty()) {
            if (!graph.has_node(a.term)) err << "warning: " << graph.source_doc_id() << ": no node '" << a.term << "'\n";
            graph = filter_graph(graph, a.term);
        }
        out << serialize_graph(graph);
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retrieval-augmented translation with a verified term knowledge graph", "crat"};
    app.require_subcommand(1);

    TranslateArgs ta;
    auto* translate = app.add_subcommand("translate", "Translate documents and write transcripts");
    auto* in_opt = translate->add_option("--input", ta.input, "Plain text file or JSON Lines corpus");
    auto* text_opt = translate->add_option("--text", ta.text, "Literal source text");
    in_opt->excludes(text_opt);
    translate->add_option("--id", ta.id, "Document id for --text")->capture_default_str();
    translate->add_option("--langs", ta.langs, "Language pair as SRC-TGT")->capture_default_str();
    translate->add_option("--config", ta.config, "Run configuration (JSON)")->required();
    translate->add_option("--output", ta.output, "Transcript directory")->required();
    translate->add_option("--mode", ta.mode, "crat, unrefined_kg or direct (overrides the config)");
    translate->add_option("--width", ta.width, "Documents translated concurrently");
    translate->add_flag("--no-cache", ta.no_cache, "Bypass the response cache");

    BuildIndexArgs ba;
    auto* build = app.add_subcommand("build-index", "Build a BM25 index from a JSON Lines corpus");
    build->add_option("--corpus", ba.corpus, "Corpus of {id, title, text} records")->required();
    build->add_option("--output", ba.output, "Index file to write")->required();
    build->add_option("--tokenizer", ba.tokenizer, "simple or whitespace")->capture_default_str();

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "Score transcripts against a parallel corpus");
    evaluate->add_option("--results", ea.results, "Transcript directory; give two to compare baseline and crat")
        ->required();
    evaluate->add_option("--corpus", ea.corpus, "Parallel corpus (JSON Lines)")->required();
    evaluate->add_option("--config", ea.config, "Run configuration for CONSIS and metric toggles");
    evaluate->add_option("--report", ea.report, "Write the JSON report here");
    evaluate->add_option("--scores", ea.scores, "External scorer output, JSON Lines {id, score}");
    evaluate->add_flag("--no-cache", ea.no_cache, "Bypass the response cache");

    InspectArgs ia;
    auto* inspect = app.add_subcommand("inspect-kg", "Print the knowledge graph of a transcript");
    inspect->add_option("--transcript", ia.transcript, "Document directory or run output directory")->required();
    inspect->add_option("--term", ia.term, "Only this term's node and triples");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitFatal;
    }

    try {
        if (*translate) {
            if (ta.input.empty() && ta.text.empty()) throw Error(ErrorKind::invalid_argument, "give --input or --text");
            return cmd_translate(ta, out, err);
        }
        if (*build) return cmd_build_index(ba, out, err);
        if (*evaluate) return cmd_evaluate(ea, out, err);
        if (*inspect) return cmd_inspect_kg(ia, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}

}  // namespace crat::cli
