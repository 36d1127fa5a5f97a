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

#include <filesystem>
#include <map>
#include <optional>
#include <memory>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crat/pipeline.hpp"
#include "crat/transkg.hpp"
#include "crat/types.hpp"

namespace crat::test {

namespace fs = std::filesystem;

fs::path data_dir();
fs::path golden_dir();

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& bytes);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    TempDir(TempDir&&) noexcept;
    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

/// Compares against tests/golden/<name>; CRAT_UPDATE_GOLDEN=1 rewrites it.
/// Returns an empty string on match, else a description of the mismatch.
std::string golden_mismatch(const std::string& name, const std::string& actual);

// Scripted replies, each a single fenced block.
std::string block(const nlohmann::json& payload);
std::string detector_reply(const std::vector<std::pair<std::string, std::string>>& surface_category);
std::string extractor_reply(const std::vector<std::tuple<std::string, std::string, std::string, std::string>>&
                                subject_relation_object_term);
std::string judge_reply(bool correct,
                        const std::vector<std::tuple<std::string, std::string, std::string>>& triples = {});
std::string translator_reply(const std::string& translation,
                             const std::map<std::string, std::vector<std::string>>& renderings);

/// The bank/Scotia fixture copied to a temp dir, with its index built.
struct ScotiaWorkspace {
    TempDir dir;
    fs::path config;
    std::string geo_text;
    std::string fin_text;
};
ScotiaWorkspace make_scotia_workspace();

/// Runs one scotia document through the library with the workspace config.
/// A cache directory, when given, turns the response cache on.
TranslationResult run_scotia(const ScotiaWorkspace& ws, PipelineMode mode, const std::string& doc_id,
                           const std::string& text, const std::optional<fs::path>& cache_dir = std::nullopt);

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};
CliRun run_cli(const std::vector<std::string>& args);

/// Serves fixed documents per query term, in the given order.
class MapSource : public RetrievalSource {
public:
    explicit MapSource(std::map<std::string, std::vector<RetrievedDocument>> by_term)
        : by_term_(std::move(by_term)) {}
    DocumentSource kind() const noexcept override { return DocumentSource::local_index; }
    std::vector<RetrievedDocument> fetch(const RetrievalQuery& query, std::size_t k) override;

private:
    std::map<std::string, std::vector<RetrievedDocument>> by_term_;
};

/// A randomized run scripted end to end: 0-6 terms, 0-8 documents, random
/// verdicts per (term, document) pair.
struct Scenario {
    std::unique_ptr<Gateway> gateway;
    PipelineConfig config;
    std::string source;
    std::vector<std::pair<std::string, std::string>> judging_order;  // (term, doc id)
    std::vector<std::string> expected_accepted;
};
Scenario make_random_scenario(std::mt19937_64& rng, PipelineMode mode = PipelineMode::crat);

/// Random well-formed graph over a small vocabulary.
TransKG random_graph(std::mt19937_64& rng);

}  // namespace crat::test
