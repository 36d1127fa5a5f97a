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

#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "crat/transkg.hpp"

namespace {

crat::TransKG graph_of(std::size_t terms, std::size_t docs) {
    std::string source;
    std::vector<crat::TermCandidate> cands;
    for (std::size_t i = 0; i < terms; ++i) {
        const auto s = "term" + std::to_string(i);
        cands.push_back({s, {source.size(), source.size() + s.size()}, crat::TermCategory::new_term, ""});
        source += s + " ";
    }
    auto g = crat::new_graph("bench", cands);
    for (std::size_t d = 0; d < docs; ++d) {
        const auto id = "doc" + std::to_string(d);
        const auto& key = cands[d % terms].surface;
        std::vector<crat::KnowledgeTriple> triples;
        for (int t = 0; t < 4; ++t) {
            triples.push_back({key, "relation" + std::to_string(t), "object " + id, crat::Provenance::external(id), {key}});
        }
        g = crat::integrate_external(g, {id, "", "", crat::DocumentSource::local_index, 1.0},
                                     {id, crat::Verdict::correct, "", "", ""}, triples);
    }
    return g;
}

void BM_SerializeGraph(benchmark::State& state) {
    const auto g = graph_of(6, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(crat::serialize_graph(g));
}
BENCHMARK(BM_SerializeGraph)->Arg(8)->Arg(64);

void BM_DeserializeGraph(benchmark::State& state) {
    const auto text = crat::serialize_graph(graph_of(6, static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(crat::deserialize_graph(text));
}
BENCHMARK(BM_DeserializeGraph)->Arg(8)->Arg(64);

void BM_IntegrateIncorrect(benchmark::State& state) {
    const auto g = graph_of(6, 32);
    const crat::RetrievedDocument doc{"spurious", "", "", crat::DocumentSource::remote, 1.0};
    const crat::JudgeVerdict no{"spurious", crat::Verdict::incorrect, "", "", ""};
    for (auto _ : state) benchmark::DoNotOptimize(crat::integrate_external(g, doc, no, {}));
}
BENCHMARK(BM_IntegrateIncorrect);

}  // namespace
