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

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace crat {

/// A text template with `{{name}}` placeholders. Rendering is a single
/// pass, so substituted values are never re-expanded.
class PromptTemplate {
public:
    /// Throws Error(invalid_argument) on an unterminated or empty placeholder.
    static PromptTemplate compile(std::string name, std::string_view text);

    /// Throws Error(invalid_argument) when a placeholder has no value or a
    /// value names no placeholder.
    std::string render(const std::map<std::string, std::string>& values) const;

    const std::string& name() const noexcept { return name_; }
    const std::vector<std::string>& placeholders() const noexcept { return placeholders_; }

private:
    struct Piece {
        bool is_placeholder;
        std::string text;
    };

    std::string name_;
    std::vector<Piece> pieces_;
    std::vector<std::string> placeholders_;
};

/// Built-in versioned templates, e.g. "detector.user.v1". The final newline of
/// each asset is dropped. Throws Error(invalid_argument) for an unknown name.
const PromptTemplate& builtin_template(std::string_view name);

std::vector<std::string> builtin_template_names();

}  // namespace crat
