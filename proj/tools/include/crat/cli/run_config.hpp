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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crat/gateway.hpp"
#include "crat/pipeline.hpp"

namespace crat::cli {

/// File-backed run configuration. Sections: backends, roles, retrieval,
/// pipeline, eval. Unknown keys are rejected at every level. Relative paths
/// resolve against the directory holding the file.
struct RunConfig {
    nlohmann::json document;  // after defaults and overrides
    std::filesystem::path base_dir;

    std::string config_hash() const;
    std::string role(std::string_view name) const;  // "" when unset

    /// Applies --mode / --width style overrides, revalidating.
    void set_mode(PipelineMode mode);
    void set_width(std::size_t width);
};

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds a gateway with every configured backend registered.
std::unique_ptr<Gateway> make_gateway(const RunConfig& config, bool use_cache);

/// Loads indexes and glossaries and assembles the pipeline configuration.
PipelineConfig make_pipeline_config(const RunConfig& config);

struct EvalSettings {
    bool term_consistency = true;
    std::optional<std::string> consis_backend;
    std::optional<std::filesystem::path> external_scores;
};

EvalSettings eval_settings(const RunConfig& config);
ChatParams chat_params(const RunConfig& config);

}  // namespace crat::cli
