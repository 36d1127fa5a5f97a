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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "crat/retrieval.hpp"

namespace {

std::vector<crat::CorpusDocument> synthetic_corpus(std::size_t n, std::size_t words_per_doc) {
    std::mt19937_64 rng(17);
    std::vector<std::string> vocab;
    for (int i = 0; i < 5000; ++i) vocab.push_back("w" + std::to_string(i));
    std::vector<crat::CorpusDocument> docs;
    for (std::size_t d = 0; d < n; ++d) {
        std::string text;
        for (std::size_t w = 0; w < words_per_doc; ++w) {
            // skewed towards low ids, roughly like natural term frequencies
            const auto r = std::uniform_real_distribution<>(0, 1)(rng);
            text += vocab[static_cast<std::size_t>(r * r * r * vocab.size())] + " ";
        }
        docs.push_back({"doc" + std::to_string(d), "", std::move(text)});
    }
    return docs;
}

void BM_BuildIndex(benchmark::State& state) {
    const auto docs = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 100);
    for (auto _ : state) benchmark::DoNotOptimize(crat::build_index(docs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Search(benchmark::State& state) {
    const auto index = crat::build_index(synthetic_corpus(static_cast<std::size_t>(state.range(0)), 100));
    const std::string query = "w3 w17 w120 w999 w4000 w2";
    for (auto _ : state) benchmark::DoNotOptimize(crat::search(index, query, 5));
}
BENCHMARK(BM_Search)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_IndexRoundTrip(benchmark::State& state) {
    const auto index = crat::build_index(synthetic_corpus(2000, 100));
    for (auto _ : state) benchmark::DoNotOptimize(crat::deserialize_index(crat::serialize_index(index)));
}
BENCHMARK(BM_IndexRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace
