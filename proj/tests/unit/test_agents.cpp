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

#include <doctest.h>

#include "crat/agents.hpp"
#include "crat/error.hpp"
#include "fixtures.hpp"

using namespace crat;
using test::block;

namespace {

const std::string kRepair = "could not be used";
const std::string kBlockOnly = "Emit only the fenced";
const LangPair kEnZh{"en", "zh"};
const std::string kFin = "Scotia bank raised the rate on its savings plan. The bank also cut its account fees.";

MockRule when(std::vector<std::string> all, std::vector<std::string> none, std::string reply) {
    MockRule r;
    r.contains_all = std::move(all);
    r.contains_none = std::move(none);
    r.response = std::move(reply);
    return r;
}

struct Rig {
    Gateway gateway;
    AgentCall call;
    CallLog log;

    explicit Rig(std::vector<MockRule> rules) {
        gateway.register_mock("m", std::move(rules));
        call = {&gateway, "m", {}};
    }
};

TermCandidate bank() { return {"bank", {7, 11}, TermCategory::polyseme, ""}; }
RetrievedDocument doc() { return {"d1", "Banks", "A bank is a lender.", DocumentSource::local_index, 1.0}; }

}  // namespace

TEST_SUITE("agents") {

TEST_CASE("payload block extraction") {
    CHECK(extract_payload_block("text\n```json\n{\"a\": 1}\n```\nmore") == nlohmann::json{{"a", 1}});
    CHECK(extract_payload_block("```JSON\n{}\n```") == nlohmann::json::object());
    CHECK(extract_payload_block("```text\nx\n```\n```json\n{}\n```") == nlohmann::json::object());
    CHECK_THROWS_AS(extract_payload_block("{\"a\": 1}"), ParseError);
    CHECK_THROWS_AS(extract_payload_block("```json\n{}\n```\n```json\n{}\n```"), ParseError);
    CHECK_THROWS_AS(extract_payload_block("```json\n[1]\n```"), ParseError);
    CHECK_THROWS_AS(extract_payload_block("```json\n{\"a\":\n```"), ParseError);
    CHECK_THROWS_AS(extract_payload_block("```json\n{}"), ParseError);
}

TEST_CASE("first reply parses: no repair") {
    Rig rig({when({}, {}, block({{"ok", true}}))});
    const auto env = run_structured(rig.call, AgentKind::detector, {{ChatRole::user, "go"}}, nullptr, rig.log);
    REQUIRE(env.parsed);
    CHECK(env.repair_attempts == 0);
    CHECK(rig.log.exchanges.size() == 1);
    CHECK(rig.log.envelopes.size() == 1);
}

TEST_CASE("one repair re-prompts with the error and the bad reply") {
    Rig rig({when({kRepair}, {}, block({{"ok", true}})), when({}, {}, "no block here")});
    const auto env = run_structured(rig.call, AgentKind::detector, {{ChatRole::user, "go"}}, nullptr, rig.log);
    REQUIRE(env.parsed);
    CHECK(env.repair_attempts == 1);
    REQUIRE(rig.log.exchanges.size() == 2);
    const auto& msgs = rig.log.exchanges[1].request.messages;
    REQUIRE(msgs.size() == 3);
    CHECK(msgs[1] == ChatMessage{ChatRole::assistant, "no block here"});
    CHECK(msgs[2].content.find("no ```json block") != std::string::npos);
}

TEST_CASE("second repair asks for the bare block, then gives up") {
    Rig ok({when({kBlockOnly}, {}, block({{"ok", true}})), when({}, {}, "still prose")});
    const auto env = run_structured(ok.call, AgentKind::judge, {{ChatRole::user, "go"}}, nullptr, ok.log);
    REQUIRE(env.parsed);
    CHECK(env.repair_attempts == 2);
    CHECK(ok.log.exchanges.size() == 3);

    Rig bad({when({}, {}, "prose forever")});
    const auto failed = run_structured(bad.call, AgentKind::judge, {{ChatRole::user, "go"}}, nullptr, bad.log);
    CHECK_FALSE(failed.parsed);
    CHECK(failed.repair_attempts == 2);
    CHECK(failed.raw_text == "prose forever");
    CHECK_FALSE(failed.parse_error.empty());
    CHECK(bad.log.exchanges.size() == 3);
}

TEST_CASE("validation failures trigger repair too") {
    Rig rig({when({kRepair}, {}, block({{"terms", nlohmann::json::array()}})), when({}, {}, block({{"x", 1}}))});
    const auto terms = detect_unknown_terms(kFin, kEnZh, rig.call, rig.log);
    CHECK(terms.empty());
    CHECK(rig.log.envelopes.at(0).repair_attempts == 1);
}

TEST_CASE("non-parse errors propagate without repair") {
    Rig rig({});
    CHECK_THROWS_AS(run_structured(rig.call, AgentKind::detector, {{ChatRole::user, "go"}}, nullptr, rig.log), Error);
    CHECK(rig.log.exchanges.empty());
}

TEST_CASE("detector anchors, sorts and merges overlaps") {
    Rig rig({when({}, {}, test::detector_reply({{"savings plan", "new_term"},
                                                 {"bank", "polyseme"},
                                                 {"Scotia bank", "proper_noun"},
                                                 {"missing", "acronym"},
                                                 {"plan", "bogus"}}))});
    const auto terms = detect_unknown_terms(kFin, kEnZh, rig.call, rig.log);
    REQUIRE(terms.size() == 2);
    CHECK(terms[0].surface == "Scotia bank");
    CHECK(terms[0].span == Span{0, 11});
    CHECK(terms[0].category == TermCategory::proper_noun);
    CHECK(terms[1].surface == "savings plan");
    for (const auto& t : terms) CHECK(span_resolves(t, kFin));
    CHECK(rig.log.warnings.size() == 2);  // missing term, bad category
}

TEST_CASE("detector failure after repairs is a detection error") {
    Rig rig({when({}, {}, "no idea")});
    try {
        detect_unknown_terms(kFin, kEnZh, rig.call, rig.log);
        FAIL("expected detection error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::detection);
    }
    CHECK_THROWS_AS(detect_unknown_terms("   ", kEnZh, rig.call, rig.log), Error);
}

TEST_CASE("extractor keeps only triples keyed to known terms") {
    const std::vector terms{bank()};
    Rig rig({when({}, {}, test::extractor_reply({{"bank", "raised", "rate", "bank"},
                                                 {"bank", "cut", "fees", "ghost"},
                                                 {"", "x", "y", "bank"}}))});
    const auto triples = extract_internal_knowledge(kFin, terms, kEnZh, rig.call, rig.log);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0].object == "rate");
    CHECK_FALSE(triples[0].provenance.is_external());
    CHECK(triples[0].term_keys == std::set<std::string>{"bank"});
    CHECK(rig.log.warnings.size() == 2);

    Rig none({});
    CHECK(extract_internal_knowledge(kFin, {}, kEnZh, none.call, none.log).empty());
    CHECK(none.log.exchanges.empty());
}

TEST_CASE("extractor infers term keys from subject and object") {
    const std::vector terms{bank()};
    Rig rig({when({}, {}, block({{"triples", {{{"subject", "bank"}, {"relation", "r"}, {"object", "o"}},
                                              {{"subject", "x"}, {"relation", "r"}, {"object", "y"}}}}}))});
    const auto triples = extract_internal_knowledge(kFin, terms, kEnZh, rig.call, rig.log);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0].term_keys == std::set<std::string>{"bank"});
}

TEST_CASE("judge verdicts and triples") {
    Rig yes({when({}, {}, test::judge_reply(true, {{"bank", "is a", "lender"}, {"", "x", "y"}}))});
    const auto ok = judge_document({}, doc(), kFin, bank(), kEnZh, yes.call, yes.log);
    CHECK(ok.verdict.verdict == Verdict::correct);
    CHECK(ok.verdict.doc_id == "d1");
    REQUIRE(ok.triples.size() == 1);
    CHECK(*ok.triples[0].provenance.doc_id == "d1");
    CHECK(ok.triples[0].term_keys == std::set<std::string>{"bank"});

    Rig no({when({}, {}, test::judge_reply(false, {{"bank", "is a", "lender"}}))});
    const auto rejected = judge_document({}, doc(), kFin, bank(), kEnZh, no.call, no.log);
    CHECK(rejected.verdict.verdict == Verdict::incorrect);
    CHECK(rejected.triples.empty());

    Rig bracketed({when({}, {}, block({{"verdict", "[CORRECT]"}}))});
    CHECK(judge_document({}, doc(), kFin, bank(), kEnZh, bracketed.call, bracketed.log).verdict.verdict ==
          Verdict::correct);
}

TEST_CASE("judge fails closed") {
    for (const auto& reply : {std::string("CORRECT, clearly"), block({{"verdict", "MAYBE"}}), block({{"x", 1}})}) {
        Rig rig({when({}, {}, reply)});
        const auto out = judge_document({}, doc(), kFin, bank(), kEnZh, rig.call, rig.log);
        CHECK(out.verdict.verdict == Verdict::incorrect);
        CHECK(out.verdict.alignment_rationale == "unparsable");
        CHECK(out.triples.empty());
        CHECK(rig.log.exchanges.size() == 3);
        CHECK(rig.log.warnings.size() == 1);
    }
}

TEST_CASE("translator output") {
    Rig rig({when({}, {}, test::translator_reply("斯科舍银行", {{"bank", {"银行"}}}))});
    const auto t = translate_with_knowledge(kFin, new_graph("d", {}), {}, kEnZh, {}, rig.call, rig.log);
    CHECK(t.text == "斯科舍银行");
    REQUIRE(t.term_renderings);
    CHECK(t.term_renderings->at("bank") == std::vector<std::string>{"银行"});

    Rig bare({when({}, {}, block({{"translation", "x"}}))});
    const auto plain = translate_with_knowledge(kFin, new_graph("d", {}), {}, kEnZh, {}, bare.call, bare.log);
    CHECK_FALSE(plain.term_renderings);
    CHECK(bare.log.warnings.size() == 1);

    Rig blank({when({}, {}, block({{"translation", "  "}}))});
    try {
        translate_with_knowledge(kFin, new_graph("d", {}), {}, kEnZh, {}, blank.call, blank.log);
        FAIL("expected translation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::translation);
    }
}

TEST_CASE("consis scores are clamped and findings parsed") {
    const std::vector terms{bank()};
    Rig rig({when({}, {}, block({{"score", 140}, {"term_findings", {{{"surface", "bank"}, {"consistent", false}}}}}))});
    const auto r = consis_evaluate(kFin, "x", terms, kEnZh, rig.call, rig.log);
    CHECK(r.score == 100.0);
    REQUIRE(r.term_findings.size() == 1);
    CHECK(r.term_findings[0] == TermFinding{"bank", false, ""});
    CHECK(rig.log.warnings.size() == 1);

    Rig bad({when({}, {}, block({{"score", "high"}}))});
    try {
        consis_evaluate(kFin, "x", terms, kEnZh, bad.call, bad.log);
        FAIL("expected evaluation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::evaluation);
    }
}

}
