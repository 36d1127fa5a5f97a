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

#include "crat/eval.hpp"

namespace {

std::vector<std::string> sentences(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::vector<std::string> words{"the", "bank", "of", "river", "a", "canoe", "drifted", "toward", "slow", "rate"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        for (int w = 0; w < 25; ++w) s += words[rng() % words.size()] + " ";
        out.push_back(std::move(s));
    }
    return out;
}

void BM_CorpusBleu(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto cands = sentences(n, 1);
    const auto refs = sentences(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(crat::corpus_bleu(cands, refs, "en"));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorpusBleu)->Arg(100)->Arg(1000);

void BM_BleuZh(benchmark::State& state) {
    const std::string cand = "独木舟漂向斯科舍河的河岸。沿着那段河岸，斯科舍河又浅又缓。";
    const std::string ref = "独木舟漂向斯科舍河的岸边。沿着那段河岸，斯科舍河水浅流缓。";
    for (auto _ : state) benchmark::DoNotOptimize(crat::bleu_stats(cand, ref, "zh"));
}
BENCHMARK(BM_BleuZh);

}  // namespace
